import math
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cqglevy import (
    PoissonSpec,
    Rejection,
    counit,
    cocycle,
    cocycle_gram,
    derivation_norm_check,
    dirac_spectrum,
    dirichlet_sesquilinear,
    dirichlet_value,
    discrete_length_functional,
    from_blocks,
    generator_spectrum,
    haar_pairing,
    hunt_onplus,
    markov_semigroup,
    poisson_closed_form,
    poisson_functional,
    spectral_dimension,
    suq2_gns_generic,
    zero_functional,
    zeta_partial,
)
from cqglevy.models import (
    DiscreteGroupModel,
    OnPlusModel,
    SUq2Model,
    suq2_corep_block,
    truncated_pi,
    truncated_rho,
)
from oracles import counting_oracle, haar_oracle, haar_pair_oracle, random_kac, random_suq2, suq2_weights

HALF = Fraction(1, 2)

# random test functionals need not vanish on the unit
pytestmark = pytest.mark.filterwarnings("ignore:functional does not vanish")


def o2_hunt(exact=True):
    return hunt_onplus(OnPlusModel(2), 1 if exact else 1.0)


def z_model(length="word", radius=6):
    return DiscreteGroupModel("Z", 1, length=length, radius=radius)


def gns_poisson_spec(q=0.6):
    rep = truncated_pi(q, 24, W=4)
    v = sum(0.5 ** k * rep.basis_vector(k, 0) for k in range(6))
    return PoissonSpec(rep, v)


# --- generator spectrum -----------------------------------------------------


def test_o2_hunt_spectrum_exact():
    rep = generator_spectrum(o2_hunt(), 20)
    assert len(rep.entries) == 21
    for s, e in enumerate(rep.entries):
        assert e.label == s
        assert e.exact == Fraction(s * (s + 2), 6)
        assert e.multiplicity == (s + 1) ** 2


def test_o2_hunt_spectrum_float():
    rep = generator_spectrum(o2_hunt(exact=False), 20)
    for s, e in enumerate(rep.entries):
        assert abs(e.value - s * (s + 2) / 6) <= 1e-12 * max(1, s * s)
        assert e.exact is None


def test_zero_functional_spectrum():
    rep = generator_spectrum(zero_functional(SUq2Model(0.5)), 2)
    assert all(e.value == 0 for e in rep.entries)
    assert rep.total_multiplicity == sum((k + 1) ** 2 for k in range(5))


def test_warns_when_unit_not_annihilated():
    with pytest.warns(UserWarning, match="unit"):
        generator_spectrum(counit(OnPlusModel(2)), 2)


def test_non_finite_block_rejected():
    phi = from_blocks(OnPlusModel(2), {1: [[np.nan, 0], [0, 1]]})
    with pytest.raises(Rejection, match="non-finite"):
        generator_spectrum(phi, 1)


def test_poisson_closed_form_eigenvalues():
    """Each anti-diagonal pair ``(j, -j)``, ``j > 0``, gives ``-1 +- q^{(s-j)(s+j+1)+2j}``."""
    q = 0.5
    phi = poisson_closed_form(SUq2Model(q))
    for s2 in range(8):
        s = Fraction(s2, 2)
        vals = np.sort_complex(np.linalg.eigvals(phi.matrix(s)))
        expect = []
        for a in range(s2 + 1):
            j = a - s
            if j > 0:
                e = (s - j) * (s + j + 1) + 2 * j
                expect += [-(1 + q ** float(e)), -(1 - q ** float(e))]
            elif j == 0:
                expect.append(-1 + (-1) ** int(s) * q ** float(s * (s + 1)))
        assert np.allclose(vals, np.sort_complex(np.array(expect, dtype=complex)), atol=1e-10)


def test_general_eigensolver_matches_numpy():
    rng = np.random.default_rng(4)
    phi = random_suq2(SUq2Model(0.5), rng, "generic", 2)
    rep = generator_spectrum(phi, 2)
    for s in SUq2Model(0.5).labels(2):
        ours = [e for e in rep.block_entries(s) for _ in range(e.multiplicity // (int(2 * s) + 1))]
        ref = np.linalg.eigvals(-phi.matrix(s))
        ours = np.array([complex(e.value) for e in ours])
        assert np.allclose(np.sort_complex(ours), np.sort_complex(ref), atol=1e-10)


def test_kms_blocks_use_weighted_solver():
    phi = random_suq2(SUq2Model(0.4), np.random.default_rng(1), "kms", 2)
    rep = generator_spectrum(phi, 2)
    assert rep.notes["1"] == "weighted-hermitian"
    for s in SUq2Model(0.4).labels(2):
        vals = np.array([e.value for e in rep.block_entries(s)])
        assert np.all(np.isreal(vals))


@pytest.mark.parametrize("family", ["suq2", "onplus"])
def test_total_multiplicity_is_sum_of_squares(family):
    rng = np.random.default_rng(2)
    if family == "suq2":
        m = SUq2Model(0.5)
        phi = random_suq2(m, rng, "hermitian", 3)
    else:
        m = OnPlusModel(3)
        phi = random_kac(m, rng, "hermitian", 3)
    rep = generator_spectrum(phi, 3)
    assert rep.total_multiplicity == sum(m.dim(s) ** 2 for s in m.labels(3))


def test_spectrum_is_thread_independent():
    phi = random_suq2(SUq2Model(0.5), np.random.default_rng(8), "hermitian", 4)
    assert generator_spectrum(phi, 4).entries == generator_spectrum(phi, 4, threads=4).entries


def test_gns_spectra_are_non_negative():
    phi = poisson_functional(SUq2Model(0.6), gns_poisson_spec(), 1)
    assert min(float(np.real(e.value)) for e in generator_spectrum(phi, 1).entries) >= -1e-10
    phi = hunt_onplus(OnPlusModel(4), 0.3)
    assert min(e.value for e in generator_spectrum(phi, 10).entries) >= -1e-10


# --- semigroup consistency ----------------------------------------------------


def _constructors():
    q = 0.5
    m = SUq2Model(q)
    return {
        "hunt": (hunt_onplus(OnPlusModel(3), 0.7), 3),
        "gns": (suq2_gns_generic(m, lambda s, j: -float(s) - float(j) ** 2), 2),
        "poisson": (poisson_functional(m, PoissonSpec.basis(truncated_rho(q, 0.3, 40), 1), 1), 1),
        "closed": (poisson_closed_form(m), 2),
        "discrete": (discrete_length_functional(z_model()), 4),
    }


@pytest.mark.parametrize("name", list(_constructors()))
@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_semigroup_eigenvalues_are_exponentials(name, t):
    phi, s_max = _constructors()[name]
    rep = generator_spectrum(phi, s_max)
    sg = markov_semigroup(phi, t)
    for s in phi.model.labels(s_max):
        n = phi.model.dim(s)
        mus = [complex(e.value) for e in rep.block_entries(s) for _ in range(e.multiplicity // n)]
        got = np.linalg.eigvals(sg.matrix(s))
        for mu in mus:
            assert np.min(np.abs(got - np.exp(-t * mu))) <= 1e-9


# --- Dirichlet forms ---------------------------------------------------------


def test_dirichlet_of_unit_is_zero():
    m = SUq2Model(0.5)
    phi = suq2_gns_generic(m, {(1, 0): -1.0, (1, 1): -2.0, (1, -1): -2.0})
    assert dirichlet_value(phi, {0: [[1.0]]}) == 0


@pytest.mark.parametrize("s", [1, 2, 5])
def test_dirichlet_o2_coefficient(s):
    n = s + 1
    c = np.zeros((n, n))
    c[0, n - 1] = 1.0
    val = dirichlet_value(o2_hunt(), {s: c})
    assert val == pytest.approx((s * (s + 2) / 6) / (s + 1), rel=1e-12)


@pytest.mark.parametrize("n", [-3, 0, 2])
def test_dirichlet_discrete_delta(n):
    phi = discrete_length_functional(z_model())
    assert dirichlet_value(phi, {(n,): [[1.0]]}) == pytest.approx(abs(n))


def test_dirichlet_rejects_non_gns():
    phi = poisson_closed_form(SUq2Model(0.5))
    with pytest.raises(Rejection, match="dirichlet_sesquilinear"):
        dirichlet_value(phi, {HALF: np.eye(2)})


def test_dirichlet_gns_poisson_against_operator_oracle():
    q = 0.6
    phi = poisson_functional(SUq2Model(q), gns_poisson_spec(q), 1)
    rng = np.random.default_rng(0)
    c = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    val = dirichlet_value(phi, {1: c})
    oracle = -haar_pair_oracle(q, 1, c, 1, c @ phi.matrix(1).T).real
    assert val == pytest.approx(oracle, rel=1e-9)
    assert val >= 0


def test_sesquilinear_distinct_blocks_vanish():
    phi = random_suq2(SUq2Model(0.5), np.random.default_rng(0), "kms", 2)
    assert dirichlet_sesquilinear(phi, (HALF, 0, 1), (1, 0, 0)) == 0


def test_sesquilinear_kac_reduction():
    m = OnPlusModel(3)
    phi = random_kac(m, np.random.default_rng(3), "gns", 2)
    mat = phi.matrix(2)
    d = m.quantum_dimension(2)
    for (j, k, l, mm) in [(0, 1, 0, 2), (1, 1, 2, 1), (3, 0, 3, 4)]:
        want = -(j == l) * mat[k, mm] / d
        assert dirichlet_sesquilinear(phi, (2, j, k), (2, l, mm)) == pytest.approx(want, abs=1e-14)


def test_sesquilinear_diagonal_formula():
    q = 0.5
    m = SUq2Model(q)
    c = lambda s, j: -1.0 - float(s) * float(j) ** 2  # noqa: E731
    phi = suq2_gns_generic(m, c)
    for s in (HALF, 1, Fraction(3, 2)):
        js = suq2_weights(s)
        d = m.quantum_dimension(s)
        for a, j in enumerate(js):
            for b, k in enumerate(js):
                val = dirichlet_sesquilinear(phi, (s, a, b), (s, a, b))
                want = -q ** (-j) * q ** k * c(s, k) / d
                assert val == pytest.approx(want, rel=1e-12)
                other = dirichlet_sesquilinear(phi, (s, a, b), (s, (a + 1) % len(js), b))
                assert other == 0


@pytest.mark.parametrize("kind", ["kms", "herm_kms", "gns"])
def test_sesquilinear_against_sigma_weighted_oracle(kind):
    """``-h(sigma(a)^* sigma(L b))`` with ``sigma_{-i/4}(u_jk) = q^{(j+k)/2} u_jk``."""
    q = 0.5
    phi = random_suq2(SUq2Model(q), np.random.default_rng(11), kind, 1)
    for s in (HALF, 1):
        n = int(2 * s) + 1
        w = q ** (0.5 * (suq2_weights(s)[:, None] + suq2_weights(s)[None, :]))
        mat = phi.matrix(s)
        for (j, k, l, mm) in [(0, 0, 0, 0), (0, 1, 1, 0), (1, 0, 0, 1), (n - 1, n - 1, 0, n - 1)]:
            a = np.zeros((n, n))
            a[j, k] = 1.0
            b = np.zeros((n, n))
            b[l, mm] = 1.0
            oracle = -haar_pair_oracle(q, s, a * w, s, (b @ mat.T) * w)
            assert dirichlet_sesquilinear(phi, (s, j, k), (s, l, mm)) == pytest.approx(oracle, abs=1e-12)


def test_sesquilinear_rejects_non_kms():
    phi = poisson_closed_form(SUq2Model(0.5))
    with pytest.raises(Rejection):
        dirichlet_sesquilinear(phi, (HALF, 0, 0), (HALF, 0, 0))


@pytest.mark.parametrize("kind", ["gns", "generic"])
def test_translation_invariance_identity(kind):
    """``Q(a, b) 1 = sum a_(1)^* b_(1) Q(a_(2), b_(2))`` with ``Q(a, b) = -h(a^* L b)``."""
    q = 0.5
    m = SUq2Model(q)
    rep = truncated_rho(q, 0.7, 40)
    phi = random_suq2(m, np.random.default_rng(1), kind, 1)
    for s in (HALF, 1):
        ops = suq2_corep_block(s, rep)
        n = ops.shape[0]
        mt = phi.matrix(s).T
        unit = np.eye(n)

        def Q(j, k, l, mm):
            return -haar_pairing(m, s, np.outer(unit[j], unit[k]), s, np.outer(unit[l], unit[mm]) @ mt)

        for (j, k, l, mm) in [(0, 0, 0, 0), (0, 1, 1, 0), (n - 1, 0, 0, n - 1), (1, 1, 0, 1)]:
            x = sum(Q(p, k, r, mm) * ops[j, p].conj().T @ ops[l, r] for p in range(n) for r in range(n))
            resid = x - Q(j, k, l, mm) * np.eye(rep.size)
            assert np.max(np.abs(resid[:25, :25])) < 1e-12


# --- Dirac spectrum ----------------------------------------------------------


def test_dirac_o2():
    dirac = dirac_spectrum(o2_hunt(), 6)
    assert dirac.kernel == 1
    for s in range(1, 7):
        root = math.sqrt(s * (s + 2) / 3)
        hits = [e for e in dirac.entries if e.label == s]
        assert sorted(e.value for e in hits) == pytest.approx([-root, root], rel=1e-15)
        assert all(e.multiplicity == (s + 1) ** 2 for e in hits)


def test_dirac_discrete():
    dirac = dirac_spectrum(discrete_length_functional(z_model()), 6)
    assert dirac.kernel == 1
    for e in dirac.entries:
        assert abs(e.value) == pytest.approx(math.sqrt(2 * abs(e.label[0])))
        assert e.multiplicity == 1


def test_dirac_zero_functional_is_kernel_only():
    m = OnPlusModel(2)
    dirac = dirac_spectrum(zero_functional(m), 3)
    assert dirac.entries == ()
    assert dirac.kernel == sum((s + 1) ** 2 for s in range(4))


def test_dirac_rejects_negative_spectrum():
    phi = from_blocks(OnPlusModel(2), {1: [[1.0, 0], [0, 1.0]]})
    with pytest.raises(Rejection, match="negative"):
        dirac_spectrum(phi, 1)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["suq2", "onplus", "hunt"]))
def test_dirac_squares_are_bit_exact(seed, family):
    rng = np.random.default_rng(seed)
    if family == "suq2":
        phi = random_suq2(SUq2Model(0.2 + 0.7 * rng.random()), rng, "gns", 2)
        phi = from_blocks(phi.model, {s: -np.abs(phi.matrix(s)) for s in phi.model.labels(2)})
    elif family == "onplus":
        phi = hunt_onplus(OnPlusModel(2 + int(rng.integers(0, 3))), float(rng.random()))
    else:
        phi = hunt_onplus(OnPlusModel(2), int(rng.integers(1, 5)))
    spec = generator_spectrum(phi, 2)
    dirac = dirac_spectrum(phi, 2, spectrum=spec)
    positive = [(e.label, e.value, e.multiplicity) for e in spec.entries if float(np.real(e.value)) > 0]
    halved = sorted(dirac.squared_halved(), key=lambda x: (x[1], str(x[0])))
    assert [(lab, float(v), mult) for lab, v, mult in sorted(positive, key=lambda x: (x[1], str(x[0])))] == halved


# --- zeta and spectral dimension ---------------------------------------------


def test_zeta_partial_matches_direct_sum():
    phi = o2_hunt()
    direct = sum(2 * (s + 1) ** 2 * (2 * s * (s + 2) / 6) ** (-1.7 / 2) for s in range(1, 31))
    assert zeta_partial(phi, 1.7, 30) == pytest.approx(direct, rel=1e-12)


def test_zeta_rejects_all_zero_spectrum():
    with pytest.raises(Rejection, match="all-zero spectrum"):
        zeta_partial(zero_functional(OnPlusModel(2)), 1.0, 4)
    with pytest.raises(Rejection, match="all-zero spectrum"):
        spectral_dimension(zero_functional(OnPlusModel(2)), 4)


def test_spectral_dimension_o2():
    start = time.perf_counter()
    rep = spectral_dimension(o2_hunt(), 200)
    assert time.perf_counter() - start < 10
    assert rep.verdict == "finite"
    assert 2.9 <= rep.estimate <= 3.1
    assert rep.total_count == sum((s + 1) ** 2 for s in range(201))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_spectral_dimension_free_orthogonal_diverges(n):
    rep = spectral_dimension(hunt_onplus(OnPlusModel(n), 1.0), 60)
    assert rep.verdict == "divergent"
    assert rep.estimate is None


def test_spectral_dimension_z_squared_length():
    model = z_model("word_squared", 200)
    rep = spectral_dimension(discrete_length_functional(model), 200)
    assert rep.verdict == "finite"
    assert 0.9 <= rep.estimate <= 1.1


@pytest.mark.parametrize("rank,length,radius,dim", [(1, "word", 200, 2), (2, "word", 60, 4)])
def test_spectral_dimension_lattices(rank, length, radius, dim):
    """Word length on Z^r: ball counts grow like Lambda^r, so the abscissa is 2r."""
    model = DiscreteGroupModel("Z", rank, length=length, radius=radius)
    rep = spectral_dimension(discrete_length_functional(model), radius)
    assert rep.verdict == "finite"
    assert rep.estimate == pytest.approx(dim, abs=0.05)


@pytest.mark.parametrize("phi,s_max", [
    (o2_hunt(), 40),
    (hunt_onplus(OnPlusModel(3), 0.5), 12),
    (discrete_length_functional(DiscreteGroupModel("F", 2, radius=4)), 4),
])
def test_counting_function_against_oracle(phi, s_max):
    rep = spectral_dimension(phi, s_max)
    spec = generator_spectrum(phi, s_max)
    pairs = [(float(np.real(v)), m) for v, m in spec.pairs]
    counts = [c for _, c in rep.counting]
    assert counts == sorted(counts)
    for lam, count in rep.counting:
        assert count == counting_oracle(pairs, lam)
    assert rep.total_count == spec.total_multiplicity


# --- cocycles and the derivation norm ----------------------------------------

WORDS = st.lists(st.sampled_from(["a", "a*", "g", "g*"]), min_size=0, max_size=2)


def test_cocycle_of_unit_vanishes():
    assert np.all(cocycle(gns_poisson_spec(), []) == 0)


@given(WORDS, WORDS)
def test_cocycle_rule(a, b):
    spec = gns_poisson_spec()
    rep = spec.rep
    lhs = cocycle(spec, a + b)
    rhs = rep.word(a) @ cocycle(spec, b) + cocycle(spec, a) * rep.counit(b)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


@given(WORDS.filter(lambda w: any(x.startswith("g") for x in w)),
       WORDS.filter(lambda w: any(x.startswith("g") for x in w)))
def test_gram_is_functional_on_counit_kernel(a, b):
    spec = gns_poisson_spec()
    v = spec.vector
    direct = np.vdot(v, spec.rep.word(a + b) @ v)
    assert abs(cocycle_gram(spec, a, b) - direct) < 1e-12


def test_gram_reproduces_poisson_block():
    """``phi(u_jk)`` at s = 1/2 from Gram values: ``phi(gamma) = <eta(1), ...>`` vanishes, ``phi(alpha)``
    follows from ``alpha - 1``."""
    q = 0.6
    spec = gns_poisson_spec(q)
    phi = poisson_functional(SUq2Model(q), spec, 1)
    v = spec.vector
    gamma_val = np.vdot(v, spec.rep.gamma @ v)
    assert phi.matrix(HALF)[1, 0] == pytest.approx(gamma_val, abs=1e-14)
    assert phi.matrix(HALF)[0, 0] == pytest.approx(np.vdot(v, spec.rep.alpha @ v) - np.vdot(v, v), abs=1e-14)


def test_truncation_rejection_names_required_size():
    rep = truncated_rho(0.5, 0.0, 6)
    spec = PoissonSpec.basis(rep, 3)
    with pytest.raises(Rejection, match=r"need M >= 7"):
        cocycle(spec, ["a", "a", "a"])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_derivation_norm_identity(seed):
    rng = np.random.default_rng(seed)
    spec = gns_poisson_spec()
    a = {HALF: rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)),
         1: rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))}
    lhs, rhs = derivation_norm_check(spec, a)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)


def test_derivation_norm_oracle_for_rhs():
    q = 0.6
    spec = gns_poisson_spec(q)
    phi = poisson_functional(SUq2Model(q), spec, 1)
    c = np.array([[1.0, 2.0j], [0.5, -1.0]])
    _, rhs = derivation_norm_check(spec, {HALF: c})
    oracle = -2 * haar_oracle(q, lambda r: (np.einsum("jk,jkab->ab", c, suq2_corep_block(HALF, r)).conj().T
                                           @ np.einsum("jk,jkab->ab", c @ phi.matrix(HALF).T,
                                                       suq2_corep_block(HALF, r)))).real
    assert rhs == pytest.approx(oracle, rel=1e-9)
