"""Compressive estimation of geometric RIS channels on angle grids.

Both hops are expanded on discrete angle dictionaries: with tx-side and
surface-side dictionaries ``A1`` (m_t x G), ``A2`` (n x G) and
surface/rx dictionaries ``B1`` (n x H), ``B2`` (m_r x H), the received
slot for pilot ``x`` and surface state ``psi`` is linear in the
coefficient vector ``lam = vec(Lambda_g^T kron Lambda_h)``:

    y = sqrt(rho) K(x, psi) lam + w,
    K(x, psi) = ((A2^T kr B1^H) psi)^T kron ((x^T kron I)(A1* kron B2))

where ``kr`` is the column-wise Kronecker product.  ``lam`` has (GH)^2
entries but only L*P nonzeros, so greedy pursuit recovers it from far
fewer slots than the unstructured dimension suggests.  ``K`` factors as
``v^T kron P``, which is what the matrix-free operator exploits: a
matvec costs O((GH)^2) instead of materializing m_r*(GH)^2 entries.
"""

from dataclasses import dataclass

import numpy as np

from .channels import complex_normal, steering
from .exceptions import (
    DimensionMismatchError,
    IdentifiabilityError,
    MemoryBudgetError,
)

# Dense stacks above this element count must go through the operator path.
DEFAULT_DENSE_BUDGET = 2 ** 23


@dataclass
class Dictionary:
    """Angle dictionary with unit-norm steering atoms on a uniform sin grid."""

    atoms: np.ndarray      # (array_size, grid_size)
    sin_grid: np.ndarray   # grid points in [-1, 1)

    @property
    def grid_size(self) -> int:
        return self.atoms.shape[1]


def build_dictionary(array_size: int, grid_size: int) -> Dictionary:
    """Steering atoms at ``sin(angle) = -1 + 2k/grid_size``, L2-normalized."""
    if array_size < 1 or grid_size < 1:
        raise ValueError(
            f"array_size and grid_size must be positive, got "
            f"{array_size}, {grid_size}"
        )
    sin_grid = -1.0 + 2.0 * np.arange(grid_size) / grid_size
    m = np.arange(array_size)
    atoms = np.exp(1j * np.pi * np.outer(m, sin_grid)) / np.sqrt(array_size)
    return Dictionary(atoms=atoms, sin_grid=sin_grid)


@dataclass
class SparseProblem:
    """Dictionaries for both hops of one link."""

    dict_tx: Dictionary       # A1: transmit side of G
    dict_ris_tx: Dictionary   # A2: surface side of G
    dict_ris_rx: Dictionary   # B1: surface side of H
    dict_rx: Dictionary       # B2: receive side of H

    def __post_init__(self):
        if self.dict_ris_tx.atoms.shape[0] != self.dict_ris_rx.atoms.shape[0]:
            raise DimensionMismatchError(
                "dict_ris_tx and dict_ris_rx must share the surface size"
            )

    @property
    def m_t(self) -> int:
        return self.dict_tx.atoms.shape[0]

    @property
    def m_r(self) -> int:
        return self.dict_rx.atoms.shape[0]

    @property
    def n(self) -> int:
        return self.dict_ris_tx.atoms.shape[0]

    @property
    def grid_g(self) -> int:
        return self.dict_tx.grid_size

    @property
    def grid_h(self) -> int:
        return self.dict_rx.grid_size

    @property
    def atom_pairs(self) -> int:
        """GH, the row/column count of the coefficient matrix."""
        return self.grid_g * self.grid_h

    def khatri_rao_states(self) -> np.ndarray:
        """(A2^T kr B1^H) as a (GH x n) matrix, column n per surface element."""
        a2, b1 = self.dict_ris_tx.atoms, self.dict_ris_rx.atoms
        out = np.empty((self.atom_pairs, self.n), dtype=complex)
        for idx in range(self.n):
            out[:, idx] = np.kron(a2[idx, :], b1[idx, :].conj())
        return out


def make_sparse_problem(m_t: int, m_r: int, n: int, grid_g: int,
                        grid_h: int) -> SparseProblem:
    """Problem with matching uniform dictionaries on all four sides."""
    return SparseProblem(
        dict_tx=build_dictionary(m_t, grid_g),
        dict_ris_tx=build_dictionary(n, grid_g),
        dict_ris_rx=build_dictionary(n, grid_h),
        dict_rx=build_dictionary(m_r, grid_h),
    )


def _slot_factors(x: np.ndarray, psi: np.ndarray, problem: SparseProblem,
                  kr: np.ndarray | None = None):
    """Per-slot factors P (m_r x GH) and v (GH,) with K = v^T kron P."""
    x = np.asarray(x, dtype=complex).reshape(-1)
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if x.shape[0] != problem.m_t:
        raise DimensionMismatchError(
            f"pilot x has length {x.shape[0]}, expected m_t={problem.m_t}"
        )
    if psi.shape[0] != problem.n:
        raise DimensionMismatchError(
            f"state psi has length {psi.shape[0]}, expected n={problem.n}"
        )
    if kr is None:
        kr = problem.khatri_rao_states()
    v = kr @ psi
    p = np.kron(x @ problem.dict_tx.atoms.conj(), problem.dict_rx.atoms)
    return p, v


def measurement_row(x: np.ndarray, psi: np.ndarray, problem: SparseProblem,
                    max_dense_elements: int = DEFAULT_DENSE_BUDGET) -> np.ndarray:
    """Dense K(x, psi), shape (m_r, (GH)^2).

    Refuses to materialize above the element budget; use
    ``stack_sparse(..., mode="operator")`` for large grids instead.
    """
    gh = problem.atom_pairs
    if problem.m_r * gh * gh > max_dense_elements:
        raise MemoryBudgetError(
            f"dense K needs {problem.m_r * gh * gh} elements, over the budget of "
            f"{max_dense_elements}; use the matrix-free operator mode"
        )
    p, v = _slot_factors(x, psi, problem)
    return np.kron(v, p)


class StackedSparseOperator:
    """Matrix-free vertical stack of measurement rows over J slots.

    Exposes exactly what pursuit needs: ``matvec``, ``rmatvec``, dense
    extraction of a few columns, and column norms, all without forming
    the (J*m_r) x (GH)^2 matrix.
    """

    def __init__(self, pilots: np.ndarray, states: np.ndarray,
                 problem: SparseProblem):
        pilots = np.asarray(pilots, dtype=complex)
        states = np.asarray(states, dtype=complex)
        if pilots.ndim != 2 or states.ndim != 2 or pilots.shape[0] != states.shape[0]:
            raise DimensionMismatchError(
                "pilots and states must be 2-D with one row per slot"
            )
        self.problem = problem
        kr = problem.khatri_rao_states()
        n_slots = pilots.shape[0]
        gh = problem.atom_pairs
        self._p = np.empty((n_slots, problem.m_r, gh), dtype=complex)
        self._v = np.empty((n_slots, gh), dtype=complex)
        for j in range(n_slots):
            self._p[j], self._v[j] = _slot_factors(pilots[j], states[j], problem, kr)
        self.num_slots = n_slots

    @property
    def shape(self) -> tuple:
        gh = self.problem.atom_pairs
        return (self.num_slots * self.problem.m_r, gh * gh)

    def matvec(self, lam: np.ndarray) -> np.ndarray:
        gh = self.problem.atom_pairs
        mat = np.asarray(lam, dtype=complex).reshape(gh, gh, order="F")
        mixed = mat @ self._v.T                      # (GH, J)
        out = np.einsum("jrp,pj->jr", self._p, mixed)
        return out.reshape(-1)

    def rmatvec(self, resid: np.ndarray) -> np.ndarray:
        m_r = self.problem.m_r
        r = np.asarray(resid, dtype=complex).reshape(self.num_slots, m_r)
        u = np.einsum("jrp,jr->pj", self._p.conj(), r)   # (GH, J)
        return (u @ self._v.conj()).reshape(-1, order="F")

    def columns(self, indices: np.ndarray) -> np.ndarray:
        """Dense submatrix of the selected global columns, (J*m_r, k)."""
        gh = self.problem.atom_pairs
        indices = np.asarray(indices, dtype=int)
        q, p = np.divmod(indices, gh)
        cols = self._p[:, :, p] * self._v[:, None, q]
        return cols.reshape(self.num_slots * self.problem.m_r, indices.shape[0])

    def col_norms(self) -> np.ndarray:
        """Euclidean norm of every stacked column, ((GH)^2,)."""
        p_pow = np.sum(np.abs(self._p) ** 2, axis=1)     # (J, GH)
        v_pow = np.abs(self._v) ** 2                     # (J, GH)
        norms2 = p_pow.T @ v_pow                         # [p, q]
        return np.sqrt(norms2.reshape(-1, order="F"))

    def column_class_ids(self) -> np.ndarray:
        """Canonical index of each column's exact-duplicate class."""
        return _canonical_columns(self.problem, np.arange(self.shape[1]))

    def to_dense(self, max_dense_elements: int = DEFAULT_DENSE_BUDGET) -> np.ndarray:
        rows, cols = self.shape
        if rows * cols > max_dense_elements:
            raise MemoryBudgetError(
                f"dense stack needs {rows * cols} elements, over the budget of "
                f"{max_dense_elements}"
            )
        return self.columns(np.arange(cols))


class _DenseOperator:
    """Adapter giving ndarray stacks the pursuit-facing interface."""

    def __init__(self, mat: np.ndarray):
        self.mat = np.asarray(mat, dtype=complex)
        self.shape = self.mat.shape

    def matvec(self, lam):
        return self.mat @ lam

    def rmatvec(self, resid):
        return self.mat.conj().T @ resid

    def columns(self, indices):
        return self.mat[:, np.asarray(indices, dtype=int)]

    def col_norms(self):
        return np.linalg.norm(self.mat, axis=0)


def stack_sparse(pilots: np.ndarray, states: np.ndarray, problem: SparseProblem,
                 mode: str = "auto",
                 max_dense_elements: int = DEFAULT_DENSE_BUDGET):
    """Stack J slots into a measurement operator.

    ``mode`` is "dense" (ndarray, subject to the element budget),
    "operator" (matrix-free), or "auto" (dense when it fits).
    """
    op = StackedSparseOperator(pilots, states, problem)
    if mode == "operator":
        return op
    rows, cols = op.shape
    if mode == "dense":
        return op.to_dense(max_dense_elements)
    if mode == "auto":
        if rows * cols <= max_dense_elements:
            return op.to_dense(max_dense_elements)
        return op
    raise ValueError(f"mode must be dense, operator or auto, got {mode!r}")


def _as_operator(operator):
    if isinstance(operator, np.ndarray):
        return _DenseOperator(operator)
    return operator


def _normalized_metric(corr: np.ndarray, norms: np.ndarray) -> np.ndarray:
    metric = np.abs(corr)
    np.divide(metric, norms, out=metric, where=norms > 0)
    metric[norms == 0] = 0.0
    return metric


def _top_k(metric: np.ndarray, k: int) -> np.ndarray:
    # Stable descending sort so exact ties resolve to the lowest index.
    order = np.argsort(-metric, kind="stable")
    return order[:k]


def _top_k_distinct(metric: np.ndarray, k: int, class_ids,
                    taken=None) -> np.ndarray:
    """Top-k indices by metric, at most one per duplicate-column class.

    Identical columns carry identical metrics, so a plain k-wide selection
    can collapse onto copies of a single atom and starve the expansion.
    ``taken`` lists class ids already in the support.  ``class_ids=None``
    falls back to the plain stable top-k.
    """
    if class_ids is None:
        return _top_k(metric, k)
    order = np.argsort(-metric, kind="stable")
    seen = set() if taken is None else {int(c) for c in taken}
    picks = []
    for idx in order:
        cid = int(class_ids[idx])
        if cid in seen:
            continue
        seen.add(cid)
        picks.append(int(idx))
        if len(picks) == k:
            break
    return np.asarray(picks, dtype=int)


def _ls_on_support(op, y: np.ndarray, support: np.ndarray):
    cols = op.columns(support)
    coef, *_ = np.linalg.lstsq(cols, y, rcond=None)
    return coef, y - cols @ coef


def omp(operator, y: np.ndarray, k: int):
    """Orthogonal matching pursuit with norm-normalized atom selection.

    Selection divides each correlation by the stacked column norm so the
    chosen atom is the one minimizing the single-atom LS residual; exact
    ties go to the lowest index.  Returns ``(lam_hat, support)`` with
    ``support`` sorted ascending.
    """
    op = _as_operator(operator)
    y = np.asarray(y, dtype=complex).reshape(-1)
    rows, cols = op.shape
    if k < 1 or k > rows:
        raise IdentifiabilityError(
            f"sparsity k={k} must lie in [1, {rows}] measurements"
        )
    lam_hat = np.zeros(cols, dtype=complex)
    y_norm = np.linalg.norm(y)
    if y_norm == 0:
        return lam_hat, np.array([], dtype=int)
    norms = op.col_norms()
    support: list = []
    resid = y
    coef = np.array([], dtype=complex)
    for _ in range(k):
        metric = _normalized_metric(op.rmatvec(resid), norms)
        metric[support] = -np.inf
        support.append(int(np.argmax(metric)))
        coef, resid = _ls_on_support(op, y, np.asarray(support))
        if np.linalg.norm(resid) <= 1e-12 * y_norm:
            break
    support_arr = np.asarray(support)
    order = np.argsort(support_arr)
    lam_hat[support_arr] = coef
    return lam_hat, support_arr[order]


def subspace_pursuit(operator, y: np.ndarray, k: int,
                     max_iter: int = 50, stall_tol: float = 1e-8):
    """Subspace pursuit: expand by k candidates, LS, prune back to k.

    Iterates until the residual norm stops decreasing by a relative
    ``stall_tol`` or ``max_iter`` rounds pass; returns the best support
    seen, as ``(lam_hat, support)``.
    """
    op = _as_operator(operator)
    y = np.asarray(y, dtype=complex).reshape(-1)
    rows, cols = op.shape
    if k < 1 or k > rows:
        raise IdentifiabilityError(
            f"sparsity k={k} must lie in [1, {rows}] measurements"
        )
    lam_hat = np.zeros(cols, dtype=complex)
    y_norm = np.linalg.norm(y)
    if y_norm == 0:
        return lam_hat, np.array([], dtype=int)
    norms = op.col_norms()
    ids_fn = getattr(op, "column_class_ids", None)
    class_ids = ids_fn() if ids_fn is not None else None

    support = np.sort(_top_k_distinct(
        _normalized_metric(op.rmatvec(y), norms), k, class_ids))
    coef, resid = _ls_on_support(op, y, support)
    best = (np.linalg.norm(resid), support, coef)
    for _ in range(max_iter):
        if best[0] <= 1e-12 * y_norm:
            break
        metric = _normalized_metric(op.rmatvec(resid), norms)
        metric[support] = -np.inf
        taken = class_ids[support] if class_ids is not None else None
        union = np.union1d(support,
                           _top_k_distinct(metric, k, class_ids, taken))
        union_coef, _ = _ls_on_support(op, y, union)
        keep = _top_k(np.abs(union_coef), k)
        support = np.sort(union[keep])
        coef, resid = _ls_on_support(op, y, support)
        resid_norm = np.linalg.norm(resid)
        if resid_norm < best[0]:
            improved = best[0] - resid_norm > stall_tol * best[0]
            best = (resid_norm, support, coef)
            if not improved:
                break
        else:
            break
    _, support, coef = best
    lam_hat[support] = coef
    return lam_hat, support


def reconstruct_channel(lam_hat: np.ndarray, problem: SparseProblem,
                        psi: np.ndarray) -> np.ndarray:
    """End-to-end matrix ``H diag(psi) G`` implied by a coefficient vector."""
    gh = problem.atom_pairs
    lam_hat = np.asarray(lam_hat, dtype=complex).reshape(-1)
    if lam_hat.shape[0] != gh * gh:
        raise DimensionMismatchError(
            f"lam has length {lam_hat.shape[0]}, expected {gh * gh}"
        )
    mat = lam_hat.reshape(gh, gh, order="F")
    v = problem.khatri_rao_states() @ np.asarray(psi, dtype=complex).reshape(-1)
    mixed = (mat @ v).reshape(problem.grid_h, problem.grid_g, order="F")
    return problem.dict_rx.atoms @ mixed @ problem.dict_tx.atoms.conj().T


def _canonical_columns(problem: SparseProblem, indices: np.ndarray) -> np.ndarray:
    """Elementwise map of column indices to their duplicate-class minimum."""
    gh = problem.atom_pairs
    grid_g, grid_h = problem.grid_g, problem.grid_h
    a, b = np.divmod(np.arange(gh), grid_h)
    # sin difference a/G - b/H (mod 1 in half-turns) as an exact integer key
    keys = (a * grid_h - b * grid_g) % (grid_g * grid_h)
    reps = np.full(grid_g * grid_h, -1, dtype=int)
    canon_q = np.empty(gh, dtype=int)
    for q in range(gh):
        if reps[keys[q]] < 0:
            reps[keys[q]] = q
        canon_q[q] = reps[keys[q]]
    indices = np.asarray(indices, dtype=int)
    q_idx, p_idx = np.divmod(indices, gh)
    return canon_q[q_idx] * gh + p_idx


def canonical_support(problem: SparseProblem, support: np.ndarray) -> np.ndarray:
    """Map column indices to the lowest-index exact duplicate, sorted.

    The cascade reaches the receiver only through ``psi``-weighted sums of
    ``exp(j pi n (sin a_in - sin a_out))``, so surface-side atom pairs with
    the same sin difference (mod 2) produce bit-for-bit identical operator
    columns.  Supports are therefore only identifiable up to that class;
    this canonical form makes recovered and planted supports comparable.
    """
    return np.sort(_canonical_columns(problem, support))


def pilot_budget(algorithm: str, l_paths: int, p_paths: int, grid_g: int,
                 grid_h: int, m_r: int, c: float = 4.0) -> int:
    """Slot budget for reliable greedy recovery.

    OMP: ceil(c * LP * ln(GH) / m_r); SP: ceil(c * LP * ln(GH/sqrt(LP)) / m_r).
    """
    if min(l_paths, p_paths, grid_g, grid_h, m_r) < 1:
        raise ValueError("all sparse-budget arguments must be positive")
    k = l_paths * p_paths
    gh = grid_g * grid_h
    if algorithm == "omp":
        raw = c * k * np.log(gh) / m_r
    elif algorithm == "sp":
        raw = c * k * np.log(gh / np.sqrt(k)) / m_r
    else:
        raise ValueError(f"algorithm must be omp or sp, got {algorithm!r}")
    return int(np.ceil(raw))


@dataclass
class PlantedChannels:
    """Ground truth for recovery experiments."""

    lam: np.ndarray          # coefficient vector, (GH)^2 with L*P nonzeros
    support: np.ndarray      # nonzero indices of lam
    g_mat: np.ndarray        # true tx->surface channel (n, m_t)
    h_mat: np.ndarray        # true surface->rx channel (m_r, n)


def plant_sparse_channels(problem: SparseProblem, l_paths: int, p_paths: int,
                          rng: np.random.Generator,
                          off_grid: float = 0.0) -> PlantedChannels:
    """Draw on-grid (or deliberately off-grid) geometric channels.

    ``off_grid`` displaces every true angle by that fraction of a grid
    cell in the sin domain; 0 keeps the truth exactly representable.
    """
    def draw_side(dic: Dictionary, count: int, array_size: int):
        idx = rng.choice(dic.grid_size, size=count, replace=False)
        sin_vals = dic.sin_grid[idx]
        if off_grid != 0.0:
            cell = 2.0 / dic.grid_size
            sin_vals = np.mod(sin_vals + off_grid * cell + 1.0, 2.0) - 1.0
        m = np.arange(array_size)
        atoms = np.exp(1j * np.pi * np.outer(m, sin_vals)) / np.sqrt(array_size)
        return idx, atoms

    g_rows, g_row_atoms = draw_side(problem.dict_ris_tx, l_paths, problem.n)
    g_cols, g_col_atoms = draw_side(problem.dict_tx, l_paths, problem.m_t)
    h_rows, h_row_atoms = draw_side(problem.dict_rx, p_paths, problem.m_r)
    h_cols, h_col_atoms = draw_side(problem.dict_ris_rx, p_paths, problem.n)

    g_gains = complex_normal(rng, l_paths)
    h_gains = complex_normal(rng, p_paths)
    g_mat = (g_row_atoms * g_gains) @ g_col_atoms.conj().T
    h_mat = (h_row_atoms * h_gains) @ h_col_atoms.conj().T

    grid_g, grid_h = problem.grid_g, problem.grid_h
    lam_g = np.zeros((grid_g, grid_g), dtype=complex)
    lam_g[g_rows, g_cols] = g_gains
    lam_h = np.zeros((grid_h, grid_h), dtype=complex)
    lam_h[h_rows, h_cols] = h_gains
    lam = np.kron(lam_g.T, lam_h).reshape(-1, order="F")
    return PlantedChannels(lam=lam, support=np.flatnonzero(lam),
                           g_mat=g_mat, h_mat=h_mat)
