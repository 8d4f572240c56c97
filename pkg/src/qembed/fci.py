"""Exact diagonalization of effective Hamiltonians.

Determinant-based full CI with Slater-Condon matrix elements, spin (S^2)
labeling across Sz sectors, and excitation classification by orbital
character.  A brute-force second-quantization evaluator over explicit
operator strings doubles as the correctness oracle for small spaces.
"""

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ValidationError
from .units import HARTREE_TO_EV

DIMENSION_CAP = 200_000
DENSE_CUTOFF = 4000


def _bits(mask):
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def _phase_below(mask, p):
    return -1.0 if bin(mask & ((1 << p) - 1)).count("1") % 2 else 1.0


@dataclass(frozen=True)
class DeterminantSpace:
    n_orb: int
    n_up: int
    n_down: int
    alpha_strings: tuple  # bitmasks, lexicographic in occupied-index tuples
    beta_strings: tuple
    dets: tuple  # (alpha_index, beta_index) in row-major order

    @property
    def dimension(self):
        return len(self.dets)

    @property
    def sz(self):
        return 0.5 * (self.n_up - self.n_down)


def enumerate_space(n_orb, n_up, n_down, cap=DIMENSION_CAP):
    if not (0 <= n_up <= n_orb and 0 <= n_down <= n_orb):
        raise ValidationError(f"bad electron counts ({n_up}, {n_down}) for {n_orb} orbitals")
    dim = comb(n_orb, n_up) * comb(n_orb, n_down)
    if dim > cap:
        raise ValidationError(
            f"determinant space dimension {dim} exceeds cap {cap}; "
            "use a smaller active space"
        )
    alphas = tuple(
        sum(1 << i for i in occ) for occ in combinations(range(n_orb), n_up)
    )
    betas = tuple(
        sum(1 << i for i in occ) for occ in combinations(range(n_orb), n_down)
    )
    dets = tuple((ia, ib) for ia in range(len(alphas)) for ib in range(len(betas)))
    return DeterminantSpace(n_orb, n_up, n_down, alphas, betas, dets)


def _single_excitations(strings, n_orb):
    """All (origin, target, p, q, sign) string pairs related by one p->q move."""
    index = {s: i for i, s in enumerate(strings)}
    out = []
    for i1, s1 in enumerate(strings):
        occ = _bits(s1)
        for p in occ:
            for q in range(n_orb):
                if s1 >> q & 1:
                    continue
                s2 = s1 ^ (1 << p) | (1 << q)
                lo, hi = (p, q) if p < q else (q, p)
                between = bin(s1 & (((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1))).count("1")
                sign = -1.0 if between % 2 else 1.0
                out.append((i1, index[s2], p, q, sign))
    return out


def _double_excitations(strings, n_orb):
    """Same-spin double moves (p<q removed, r<s added) with fermionic sign."""
    index = {s: i for i, s in enumerate(strings)}
    out = []
    for i1, s1 in enumerate(strings):
        occ = _bits(s1)
        virt = [q for q in range(n_orb) if not s1 >> q & 1]
        for p, q in combinations(occ, 2):
            for r, s in combinations(virt, 2):
                sign = 1.0
                m = s1
                for orb, anni in ((p, True), (q, True), (s, False), (r, False)):
                    sign *= _phase_below(m, orb)
                    m = m ^ (1 << orb) if anni else m | (1 << orb)
                out.append((i1, index[m], p, q, r, s, sign))
    return out


def build_hamiltonian(heff, space):
    """Sparse symmetric CI Hamiltonian from t_eff and v_eff.

    Matrix elements follow the Slater-Condon rules; determinants differing in
    more than two spin-orbitals are not connected.
    """
    n = space.n_orb
    h1 = heff.t_eff
    eri = heff.v_eff.transpose(0, 2, 1, 3)  # eri[p,q,r,s] = (pq|rs)
    alphas, betas = space.alpha_strings, space.beta_strings
    na, nb = len(alphas), len(betas)
    occ_a = np.array([[s >> i & 1 for i in range(n)] for s in alphas], dtype=float)
    occ_b = np.array([[s >> i & 1 for i in range(n)] for s in betas], dtype=float)

    j_mat = np.einsum("iijj->ij", eri)
    k_mat = np.einsum("ijji->ij", eri)
    h_diag_orb = np.diag(h1)

    e_a = occ_a @ h_diag_orb + 0.5 * np.einsum(
        "xi,ij,xj->x", occ_a, j_mat - k_mat, occ_a
    )
    e_b = occ_b @ h_diag_orb + 0.5 * np.einsum(
        "xi,ij,xj->x", occ_b, j_mat - k_mat, occ_b
    )
    cross = occ_a @ j_mat @ occ_b.T  # (na, nb)
    diag = (e_a[:, None] + e_b[None, :] + cross).ravel()

    rows, cols, vals = [], [], []
    dim = na * nb
    rows.extend(range(dim))
    cols.extend(range(dim))
    vals.extend(diag)

    singles_a = _single_excitations(alphas, n)
    singles_b = _single_excitations(betas, n)

    # single excitations: one-body part plus the common-occupied two-body sum
    for singles, occ_same, occ_other, row_of in (
        (singles_a, occ_a, occ_b, lambda i, o: i * nb + o),
        (singles_b, occ_b, occ_a, lambda i, o: o * nb + i),
    ):
        for i1, i2, p, q, sign in singles:
            common = occ_same[i1].copy()
            common[p] = 0.0
            base = h1[p, q] + common @ np.einsum("ii->i", eri[p, q])
            base -= common @ np.einsum("ii->i", eri[p, :, :, q])
            coupl = occ_other @ np.einsum("ii->i", eri[p, q])
            for o in range(len(occ_other)):
                rows.append(row_of(i1, o))
                cols.append(row_of(i2, o))
                vals.append(sign * (base + coupl[o]))

    # same-spin doubles: antisymmetrized element, spectator spin unchanged
    for i1, i2, p, q, r, s, sign in _double_excitations(alphas, n):
        val = sign * (eri[p, r, q, s] - eri[p, s, q, r])
        for o in range(nb):
            rows.append(i1 * nb + o)
            cols.append(i2 * nb + o)
            vals.append(val)
    for i1, i2, p, q, r, s, sign in _double_excitations(betas, n):
        val = sign * (eri[p, r, q, s] - eri[p, s, q, r])
        for o in range(na):
            rows.append(o * nb + i1)
            cols.append(o * nb + i2)
            vals.append(val)

    # alpha-beta doubles
    for ia1, ia2, pa, qa, sa in singles_a:
        for ib1, ib2, pb, qb, sb in singles_b:
            rows.append(ia1 * nb + ib1)
            cols.append(ia2 * nb + ib2)
            vals.append(sa * sb * eri[pa, qa, pb, qb])

    mat = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    return mat


@dataclass(frozen=True)
class FCISpectrum:
    space: DeterminantSpace
    eigenvalues: np.ndarray  # Hartree, ascending
    eigenvectors: np.ndarray  # columns
    s_squared: np.ndarray
    multiplicities: tuple
    dominant_configs: tuple  # per state: ((weight, alpha_mask, beta_mask), ...)

    @property
    def excitation_energies_ev(self):
        return (self.eigenvalues - self.eigenvalues[0]) * HARTREE_TO_EV


_MULT_NAMES = {1: "singlet", 2: "doublet", 3: "triplet", 4: "quartet", 5: "quintet"}


def _multiplicity_label(s2):
    s = 0.5 * (-1.0 + np.sqrt(1.0 + 4.0 * s2))
    mult = int(round(2.0 * s + 1.0))
    return _MULT_NAMES.get(mult, f"multiplicity-{mult}")


def solve_spectrum(mat, space, n_states):
    if n_states > space.dimension:
        raise ValidationError(
            f"requested {n_states} states from a {space.dimension}-dimensional space"
        )
    dim = space.dimension
    if dim <= DENSE_CUTOFF:
        dense = mat.toarray() if sp.issparse(mat) else np.asarray(mat)
        vals, vecs = np.linalg.eigh(dense)
        vals, vecs = vals[:n_states], vecs[:, :n_states]
    else:
        v0 = np.full(dim, 1.0 / np.sqrt(dim))
        vals, vecs = spla.eigsh(mat, k=n_states, which="SA", v0=v0)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]

    s2 = np.array([expectation_s2(space, vecs[:, i]) for i in range(n_states)])
    mult = tuple(_multiplicity_label(x) for x in s2)
    dominant = []
    for i in range(n_states):
        amps = vecs[:, i] ** 2
        top = np.argsort(-amps)[:3]
        dominant.append(
            tuple(
                (
                    float(amps[d]),
                    space.alpha_strings[space.dets[d][0]],
                    space.beta_strings[space.dets[d][1]],
                )
                for d in top
                if amps[d] > 1e-10
            )
        )
    return FCISpectrum(
        space=space,
        eigenvalues=vals,
        eigenvectors=vecs,
        s_squared=s2,
        multiplicities=mult,
        dominant_configs=tuple(dominant),
    )


# -- brute-force second-quantization oracle -----------------------------


def _sq_annihilate(state, idx):
    if not state >> idx & 1:
        return None, 0.0
    return state ^ (1 << idx), _phase_below(state, idx)


def _sq_create(state, idx):
    if state >> idx & 1:
        return None, 0.0
    return state | (1 << idx), _phase_below(state, idx)


def brute_force_hamiltonian(heff, space):
    """Dense CI matrix built by applying explicit operator strings.

    Independent of the Slater-Condon fast path; quadratic in the dimension,
    intended for spaces of dimension <= ~100.
    """
    n = space.n_orb
    t = heff.t_eff
    v = heff.v_eff

    def full_state(det):
        ia, ib = det
        return space.alpha_strings[ia] | (space.beta_strings[ib] << n)

    states = [full_state(d) for d in space.dets]
    index = {s: i for i, s in enumerate(states)}
    dim = len(states)
    h = np.zeros((dim, dim))

    def spinorb(p, spin):
        return p + spin * n

    for col, state in enumerate(states):
        # one-body: sum_{ij, sigma} t_ij adag_i a_j
        for spin in (0, 1):
            for j in range(n):
                s1, ph1 = _sq_annihilate(state, spinorb(j, spin))
                if s1 is None:
                    continue
                for i in range(n):
                    if t[i, j] == 0.0:
                        continue
                    s2, ph2 = _sq_create(s1, spinorb(i, spin))
                    if s2 is None:
                        continue
                    h[index[s2], col] += t[i, j] * ph1 * ph2
        # two-body: 1/2 sum v_ijkl adag_{i sg} adag_{j tau} a_{l tau} a_{k sg}
        for sg in (0, 1):
            for tau in (0, 1):
                for k in range(n):
                    s1, p1 = _sq_annihilate(state, spinorb(k, sg))
                    if s1 is None:
                        continue
                    for l in range(n):
                        s2, p2 = _sq_annihilate(s1, spinorb(l, tau))
                        if s2 is None:
                            continue
                        for j in range(n):
                            s3, p3 = _sq_create(s2, spinorb(j, tau))
                            if s3 is None:
                                continue
                            for i in range(n):
                                if v[i, j, k, l] == 0.0:
                                    continue
                                s4, p4 = _sq_create(s3, spinorb(i, sg))
                                if s4 is None:
                                    continue
                                h[index[s4], col] += (
                                    0.5 * v[i, j, k, l] * p1 * p2 * p3 * p4
                                )
    return h


def expectation_s2(space, vec):
    """<S^2> for a CI vector: S^2 = Sz^2 + Sz + S- S+."""
    n = space.n_orb
    sz = space.sz
    total = (sz * sz + sz) * float(vec @ vec)

    # S+ maps (n_up, n_down) -> (n_up + 1, n_down - 1)
    if space.n_down == 0:
        return total
    if space.n_up >= n:
        return total
    up_space = enumerate_space(
        n, space.n_up + 1, space.n_down - 1, cap=10 * DIMENSION_CAP
    )

    def full_state(spc, det):
        ia, ib = spc.dets[det]
        return spc.alpha_strings[ia] | (spc.beta_strings[ib] << n)

    target_index = {full_state(up_space, d): d for d in range(up_space.dimension)}
    out = np.zeros(up_space.dimension)
    for col in range(space.dimension):
        c = vec[col]
        if c == 0.0:
            continue
        state = full_state(space, col)
        for p in range(n):
            s1, ph1 = _sq_annihilate(state, p + n)  # beta p
            if s1 is None:
                continue
            s2, ph2 = _sq_create(s1, p)  # alpha p
            if s2 is None:
                continue
            out[target_index[s2]] += c * ph1 * ph2
    total += float(out @ out)
    return total


# -- excitation classification ------------------------------------------


@dataclass(frozen=True)
class LabeledState:
    index: int
    energy_ev: float
    multiplicity: str
    promotion: str  # e.g. "defect->conduction" or "ground"
    ghost: bool


def _promotion(space, ground_det, det):
    """(removed orbitals, added orbitals) per spatial orbital index."""
    ga, gb = ground_det
    da, db = det
    removed, added = [], []
    for g, d in ((ga, da), (gb, db)):
        diff = g ^ d
        removed.extend(_bits(diff & g))
        added.extend(_bits(diff & d))
    return removed, added


def classify_excitations(spectrum, characters):
    """Label excited states by dominant orbital promotion and flag ghosts.

    `characters` maps each active orbital to "defect", "valence" or
    "conduction".  A state is a ghost when its dominant promotion crosses
    between character classes and it lies below the lowest defect->defect
    excitation.
    """
    space = spectrum.space
    ground = spectrum.dominant_configs[0][0]
    ground_det = (ground[1], ground[2])
    exc = spectrum.excitation_energies_ev

    labels = []
    patterns = []
    for i in range(len(spectrum.eigenvalues)):
        if i == 0:
            patterns.append(("ground", False))
            continue
        dom = spectrum.dominant_configs[i][0]
        removed, added = _promotion(space, ground_det, (dom[1], dom[2]))
        if not removed:
            patterns.append(("ground-like", False))
            continue
        src = sorted({characters[p] for p in removed})
        dst = sorted({characters[p] for p in added})
        pattern = "+".join(src) + "->" + "+".join(dst)
        cross = set(src + dst) != {"defect"}
        patterns.append((pattern, cross))

    # lowest defect->defect excitation energy
    dd = [exc[i] for i in range(1, len(exc)) if not patterns[i][1]]
    dd_floor = min(dd) if dd else np.inf

    for i in range(len(spectrum.eigenvalues)):
        pattern, cross = patterns[i]
        ghost = bool(i > 0 and cross and exc[i] < dd_floor)
        labels.append(
            LabeledState(
                index=i,
                energy_ev=float(exc[i]),
                multiplicity=spectrum.multiplicities[i],
                promotion=pattern,
                ghost=ghost,
            )
        )
    return labels


def solve_heff(heff, n_states=None, sz=0):
    """Convenience driver: enumerate the Sz sector, build H, diagonalize."""
    n_elec = heff.n_active_elec
    n_up = (n_elec + int(round(2 * sz))) // 2
    n_down = n_elec - n_up
    space = enumerate_space(heff.n_orb, n_up, n_down)
    mat = build_hamiltonian(heff, space)
    if n_states is None:
        n_states = space.dimension
    return solve_spectrum(mat, space, n_states)
