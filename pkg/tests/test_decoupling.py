import itertools
import math

import numpy as np
import pytest

from dd_metrology.decoupling import (
    PulseSchedule,
    UnitalMap,
    apply_map,
    correlated_scheme,
    decoupling_direction,
    feasibility,
    local_projection_map,
    local_projection_schedule,
    optimize_direction,
    pauli_decompose,
    permutation_average,
    projection_map,
    projection_schedule,
    schedule_to_map,
    surviving_signal,
    symmetrize,
)
from dd_metrology.hamiltonian import (
    COMMON,
    SEHamiltonian,
    StandardForm,
    n_qubit_common,
    single_qubit,
    standard_form,
)
from dd_metrology.operators import (
    X_AXIS,
    Z_AXIS,
    DenseOperator,
    HilbertSpace,
    UnitVector3,
    pauli,
    pauli_string,
    random_hermitian,
    random_unit_vector,
    sigma_n,
)
from dd_metrology.utils import (
    DecouplingInfeasible,
    InvalidSchedule,
    InvalidSchemeRange,
    MixedParallelDirections,
    NotUnitary,
    RankTooHigh,
    SpaceMismatch,
)


def _env(dim, rng):
    return random_hermitian(HilbertSpace.environment_only((dim,)), rng)


def test_schedule_validation():
    x = pauli(1)
    with pytest.raises(InvalidSchedule):
        PulseSchedule((x,), (0.0,))
    with pytest.raises(InvalidSchedule):
        PulseSchedule((x, x), (0.0, 0.5, 0.5))
    with pytest.raises(InvalidSchedule):
        PulseSchedule((x,), (0.1, 1.0))
    with pytest.raises(NotUnitary):
        PulseSchedule((DenseOperator(HilbertSpace.qubits(1), np.diag([1.0, 2.0])),), (0.0, 1.0))


def test_schedule_from_fractions():
    s = PulseSchedule.from_fractions((pauli(1), pauli(2), pauli(3)), (1, 2, 1), 2.0)
    assert s.times == pytest.approx((0.0, 0.5, 1.5, 2.0))
    assert s.rescaled(1.0).intervals == pytest.approx((0.25, 0.5, 0.25))


def test_map_probabilities_must_sum_to_one():
    with pytest.raises(InvalidSchedule):
        UnitalMap(((0.5, pauli(0)), (0.4, pauli(1))))


def test_schedule_map_branches_follow_pulse_frames():
    x, y = pauli(1), pauli(2)
    m = schedule_to_map(PulseSchedule.from_fractions((x, y), (1, 3)))
    (p0, U0), (p1, U1) = m.branches
    assert (p0, p1) == pytest.approx((0.25, 0.75))
    assert U0.allclose(x)
    assert U1.allclose((y @ x).dagger())


def test_projection_schedule_realizes_projection(rng):
    r = UnitVector3.normalized(rng.normal(size=3))
    A = random_hermitian(HilbertSpace.qubits(1), rng)
    left = schedule_to_map(projection_schedule(r)).apply_operator(A)
    assert left.allclose(projection_map(r).apply_operator(A))
    n = UnitVector3.normalized(rng.normal(size=3))
    image = projection_map(r).apply_operator(sigma_n(n))
    assert image.allclose(r.dot(n) * sigma_n(r))


def test_map_composition_and_mixture(rng):
    A = random_hermitian(HilbertSpace.qubits(1), rng)
    px, pz = projection_map(X_AXIS), projection_map(Z_AXIS)
    both = px.compose(pz)
    assert both.apply_operator(A).allclose(px.apply_operator(pz.apply_operator(A)))
    assert both.apply_operator(pauli(1)).max_norm() < 1e-12
    half = px.mix(UnitalMap.identity(px.space), 0.25)
    expected = 0.25 * px.apply_operator(A) + 0.75 * A
    assert half.apply_operator(A).allclose(expected)
    with pytest.raises(SpaceMismatch):
        px.compose(UnitalMap.identity(HilbertSpace.qubits(2)))


def test_pauli_decompose():
    op = 0.5 * pauli_string("XZ") + 2.0 * pauli_string("II") - pauli_string("YY")
    assert pauli_decompose(op) == pytest.approx({"XZ": 0.5, "II": 2.0, "YY": -1.0})


def test_apply_map_rejects_wrong_space(rng):
    H = single_qubit(1.0, [0.0, 1.0, 0.0, 0.0], [None, _env(2, rng), None, None])
    with pytest.raises(SpaceMismatch):
        apply_map(UnitalMap.identity(HilbertSpace.qubits(2)), H)


def test_rank_two_noise_is_decoupled(rng):
    frame = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    B1, B2 = pauli(1).matrix / math.sqrt(2), pauli(2).matrix / math.sqrt(2)
    components = [1.5 * frame[j, 0] * B1 + 0.7 * frame[j, 1] * B2 for j in range(3)]
    H = single_qubit(1.3, [0.0, 1.0, 1.0, 1.0], [None, *components])
    direction = decoupling_direction(standard_form(H))
    assert direction.rank == 2
    assert direction.r3 == pytest.approx(abs(np.cross(frame[:, 0], frame[:, 1])[2]), abs=1e-9)
    H_eff = apply_map(projection_map(direction.r), H)
    assert H_eff.noise_operator().max_norm() < 1e-9
    expected = 1.3 * direction.r3 * np.kron(sigma_n(direction.r).matrix, np.eye(2))
    assert np.allclose(H_eff.system_operator().matrix, expected, atol=1e-9)


def test_transverse_noise_keeps_signal(rng):
    H = single_qubit(1.0, [0.0, 0.4, -0.9, 0.0], [None, _env(2, rng), _env(2, rng), None])
    direction = decoupling_direction(standard_form(H))
    assert direction.r3 == pytest.approx(1.0)
    H_eff = apply_map(projection_map(Z_AXIS), H)
    assert H_eff.system_operator().allclose(H.system_operator())
    assert H_eff.noise_operator().max_norm() < 1e-12


def test_noise_plane_containing_signal_is_infeasible():
    sf = StandardForm.synthetic((1.0, 1.0, 0.0), [(1, 0, 0), (0, 0, 1), (0, -1, 0)])
    with pytest.raises(DecouplingInfeasible):
        decoupling_direction(sf)


def test_rank_three_cannot_be_decoupled():
    sf = StandardForm.synthetic((1.0, 1.0, 1.0), [(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    with pytest.raises(RankTooHigh):
        decoupling_direction(sf)


def test_feasibility_of_dependent_operators(rng):
    A1, A2 = _env(2, rng), _env(2, rng)
    A3 = DenseOperator(A1.space, 0.5 * A1.matrix - 2.0 * A2.matrix)
    H = single_qubit(1.0, [0.0, 1.0, 1.0, 1.0], [None, A1, A2, A3])
    report = feasibility(H)
    assert report.feasible
    assert report.alphas == pytest.approx((0.5, -2.0))
    assert report.slowdown == pytest.approx(1 / math.sqrt(1 + 0.25 + 4.0))


def test_feasibility_of_independent_operators(rng):
    ops = [None, *(_env(3, rng) for _ in range(3))]
    report = feasibility(single_qubit(1.0, [0.0, 1.0, 1.0, 1.0], ops))
    assert not report.feasible
    assert report.slowdown is None


def test_antisymmetric_noise_cancels(rng):
    A = _env(2, rng)
    H = n_qubit_common(1.0, [[0, 0, 0, 1.0], [0, 0, 0, -1.0]], [[None, None, None, A]] * 2)
    result = symmetrize(H)
    assert result.c_bar == pytest.approx(0.0)
    assert result.A_bar is None
    assert result.hamiltonian.noise_operator().max_norm() < 1e-12
    assert result.swaps_per_permutation == 1


def test_symmetrize_matches_permutation_average(rng):
    n = 3
    ops = [[None, None, None, _env(2, rng)] for _ in range(n)]
    H = n_qubit_common(1.0, [[0, 0, 0, c] for c in rng.normal(size=n)], ops)
    result = symmetrize(H)
    assert result.hamiltonian.full_operator().allclose(permutation_average(H), atol=1e-10)
    assert result.c_bar == pytest.approx(np.mean(result.site_couplings))


def test_symmetrize_rejects_mixed_directions(rng):
    A = _env(2, rng)
    H = n_qubit_common(1.0, [[0, 1.0, 0, 0], [0, 0, 0, 1.0]], [[None, A, None, A]] * 2)
    with pytest.raises(MixedParallelDirections):
        symmetrize(H)


def test_optimize_direction_for_isotropic_noise():
    sf = StandardForm.synthetic((1.0, 1.0, 1.0), [(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    optimum = optimize_direction(sf, threads=1)
    assert not optimum.unbounded
    assert optimum.merit == pytest.approx(1.0, rel=1e-8)
    assert optimum.r.components[2] == pytest.approx(1.0, abs=1e-6)


def test_optimize_direction_prefers_quiet_axis():
    sf = StandardForm.synthetic((2.0, 1.0, 0.5), [(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    optimum = optimize_direction(sf, threads=2)
    assert optimum.merit == pytest.approx(4.0, rel=1e-8)
    assert optimum.gradient_norm < 1e-6


def test_optimize_direction_unbounded_when_decouplable():
    sf = StandardForm.synthetic((1.0, 1.0, 0.0), [(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    optimum = optimize_direction(sf, threads=1)
    assert optimum.unbounded
    assert optimum.merit == math.inf


def test_correlated_scheme_layers():
    scheme = correlated_scheme(6, 1)
    assert scheme.alpha == pytest.approx(0.5)
    assert scheme.signal_sites == (0, 2, 4)
    assert [layer.gate for layer in scheme.layers] == ["Z", "X"]
    assert scheme.layers[1].sites == (1, 3, 5)
    with pytest.raises(InvalidSchemeRange):
        correlated_scheme(3, 3)


def test_correlated_scheme_removes_neighbour_noise():
    n = 5
    scheme = correlated_scheme(n, 1)
    channel = scheme.to_map()
    for a in range(n - 1):
        label = "".join("Z" if b in (a, a + 1) else "I" for b in range(n))
        assert channel.apply_operator(pauli_string(label)).max_norm() < 1e-12
    kept = pauli_decompose(surviving_signal(scheme))
    assert kept == pytest.approx({"ZIIII": 1.0, "IIZII": 1.0, "IIIIZ": 1.0})


def test_local_projection_acts_per_site(rng):
    m = local_projection_map(Z_AXIS, 2)
    assert m.apply_operator(pauli_string("XI")).max_norm() < 1e-12
    assert m.apply_operator(pauli_string("ZZ")).allclose(pauli_string("ZZ"))


def test_local_projection_schedule_realizes_local_projection():
    n = 3
    schedule = local_projection_schedule(Z_AXIS, n)
    assert len(schedule.gates) == 2**n
    assert schedule.residual_unitary().allclose(pauli_string("III"))
    pulsed, reported = schedule_to_map(schedule), local_projection_map(Z_AXIS, n)
    for label in map("".join, itertools.product("IXYZ", repeat=n)):
        op = pauli_string(label)
        assert pulsed.apply_operator(op).allclose(reported.apply_operator(op), atol=1e-12)


def test_single_site_local_schedule_is_the_two_pulse_cycle():
    schedule = local_projection_schedule(X_AXIS, 1)
    assert [g.allclose(pauli(1)) for g in schedule.gates] == [True, True]
    assert schedule.intervals == pytest.approx((0.5, 0.5))


def test_symmetrize_averages_site_couplings(rng):
    A = _env(2, rng)
    H = n_qubit_common(1.0, [[0, 0, 0, c] for c in (1.0, 2.0, 3.0)], [[None, None, None, A]] * 3)
    result = symmetrize(H)
    assert result.site_couplings == pytest.approx((1.0, 2.0, 3.0))
    assert result.c_bar == pytest.approx(2.0)
    assert result.A_bar.allclose(A, atol=1e-12)
    assert result.hamiltonian.full_operator().allclose(permutation_average(H), atol=1e-10)


def test_symmetrize_is_idempotent(rng):
    ops = [[None, None, None, _env(2, rng)] for _ in range(3)]
    H = n_qubit_common(1.0, [[0, 0, 0, c] for c in rng.normal(size=3)], ops)
    once = symmetrize(H).hamiltonian
    twice = symmetrize(once).hamiltonian
    assert twice.full_operator().allclose(once.full_operator(), atol=1e-10)
    assert permutation_average(once).allclose(once.full_operator(), atol=1e-10)


def test_symmetrize_does_not_depend_on_how_terms_are_split(rng):
    A, B = _env(2, rng), _env(2, rng)
    single = SEHamiltonian.from_terms(1.0, 2, COMMON, (2,), [(1.0, "ZI", A, None), (-1.0, "IZ", A, None)])
    split = SEHamiltonian.from_terms(
        1.0, 2, COMMON, (2,), [(1.0, "ZI", A, None), (-1.0, "IZ", B, None), (-1.0, "IZ", A - B, None)]
    )
    first, second = symmetrize(single), symmetrize(split)
    assert second.site_couplings == pytest.approx(first.site_couplings)
    assert second.site_couplings == pytest.approx((1.0, -1.0))
    assert second.c_bar == pytest.approx(0.0, abs=1e-12)
    assert second.hamiltonian.noise_operator().max_norm() < 1e-12


def test_symmetrize_keeps_signs_across_env_operators(rng):
    A = _env(2, rng)
    H = SEHamiltonian.from_terms(
        1.0, 2, COMMON, (2,), [(1.0, "ZI", A, None), (-0.5, "IZ", 2.0 * A, None), (-1.0, "IZ", A, None)]
    )
    result = symmetrize(H)
    assert result.site_couplings == pytest.approx((1.0, -2.0))
    assert result.c_bar == pytest.approx(-0.5)
    assert result.hamiltonian.full_operator().allclose(permutation_average(H), atol=1e-10)


def test_feasibility_slowdown_equals_signal_fraction(rng):
    A1, A2 = _env(2, rng), _env(2, rng)
    H = single_qubit(1.0, [0.0, 1.0, 1.0, 1.0], [None, A1, A2, 0.5 * A1 - 2.0 * A2])
    report = feasibility(H)
    direction = decoupling_direction(standard_form(H))
    assert report.feasible
    assert report.slowdown == pytest.approx(abs(direction.r3), rel=1e-9)


def test_optimize_direction_on_anisotropic_noise(rng):
    frame = [(0.6, 0.0, 0.8), (0.0, 1.0, 0.0), (-0.8, 0.0, 0.6)]
    sf = StandardForm.synthetic((3.0, 1.0, 1.0), frame)
    optimum = optimize_direction(sf, threads=2)
    Q = sum(b * b * np.outer(n, n) for b, n in zip((3.0, 1.0, 1.0), np.array(frame)))
    z = np.array([0.0, 0.0, 1.0])

    def merit(r):
        return (r @ z) ** 2 / (r @ Q @ r)

    assert optimum.merit == pytest.approx(z @ np.linalg.solve(Q, z), rel=1e-8)
    best_random = max(merit(random_unit_vector(rng).array) for _ in range(2000))
    assert optimum.merit >= best_random - 1e-12


def test_correlated_scheme_removes_every_short_range_cluster():
    n, k = 6, 2
    channel = correlated_scheme(n, k).to_map()
    checked = 0
    for start in range(n):
        window = range(start, min(start + k + 1, n))
        for size in range(2, len(window) + 1):
            for sites in itertools.combinations(window, size):
                label = "".join("Z" if b in sites else "I" for b in range(n))
                assert channel.apply_operator(pauli_string(label)).max_norm() < 1e-12
                checked += 1
    assert checked > 0
    kept = pauli_decompose(surviving_signal(correlated_scheme(n, k)))
    assert kept == pytest.approx({"ZIIIII": 1.0, "IIIZII": 1.0})
