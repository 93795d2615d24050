import itertools
import math

import numpy as np
import pytest
from scipy import stats

from nestmc import (
    GibbsFamily,
    LatticeGraph,
    brute_force_log_z,
    brute_force_z,
    exact_gibbs_sample,
    expected_run_cost,
    hamiltonian,
    pool_runs,
    rng_stream,
    run_batch,
    spacing_diagnostic,
)
from nestmc.diagnostics import poisson_count_test
from nestmc.errors import EnumerationCapError
from nestmc.ising import beta_update, gibbs_shrink_step, sample_energy_levels

EDGE = LatticeGraph(2, ((0, 1),))
SQUARE = LatticeGraph.lattice(2, 2)


# -- graphs ---------------------------------------------------------------


def test_lattice_edge_counts():
    g = LatticeGraph.lattice(4, 4)
    assert g.n_vertices == 16 and g.n_edges == 24
    wrapped = LatticeGraph.lattice(4, 4, periodic=True)
    assert wrapped.n_edges == 32
    # a 2-wide dimension cannot wrap without creating duplicate edges
    assert LatticeGraph.lattice(2, 2, periodic=True).n_edges == 4


def test_graph_validation():
    with pytest.raises(ValueError):
        LatticeGraph(3, ((0, 0),))
    with pytest.raises(ValueError):
        LatticeGraph(3, ((0, 1), (1, 0)))
    with pytest.raises(ValueError):
        LatticeGraph(3, ((0, 5),))
    with pytest.raises(ValueError):
        LatticeGraph.lattice(0, 4)


def test_edge_list_file(tmp_path):
    path = tmp_path / "graph.txt"
    path.write_text("# comment\n0 1\n\n1 2\n")
    g = LatticeGraph.from_edge_list_file(path)
    assert g.n_vertices == 3 and g.edges == ((0, 1), (1, 2))
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n")
    with pytest.raises(ValueError):
        LatticeGraph.from_edge_list_file(empty)


# -- Hamiltonian ----------------------------------------------------------


def test_hamiltonian_examples():
    assert hamiltonian([0, 0], EDGE) == -2.0
    assert hamiltonian([0, 1], EDGE) == -1.0
    all_zero = np.zeros(16, dtype=int)
    assert hamiltonian(all_zero, LatticeGraph.lattice(4, 4)) == -25.0


def test_hamiltonian_shape_check():
    with pytest.raises(ValueError):
        hamiltonian([0, 0, 0], EDGE)


def test_negative_energy_at_least_one_exhaustive():
    for g in (EDGE, SQUARE, LatticeGraph.lattice(3, 2)):
        for bits in itertools.product((0, 1), repeat=g.n_vertices):
            assert -hamiltonian(bits, g) >= 1.0


# -- partition function oracle --------------------------------------------


def test_z_at_zero_is_two_to_the_v():
    for g in (EDGE, SQUARE, LatticeGraph.lattice(4, 4), LatticeGraph(3, ())):
        assert brute_force_z(0.0, g) == pytest.approx(2.0**g.n_vertices, rel=1e-12)


def test_z_edgeless_graph():
    g = LatticeGraph(5, ())
    for beta in (0.5, 1.0, 3.0):
        assert brute_force_z(beta, g) == pytest.approx(2**5 * math.exp(beta), rel=1e-12)


def test_z_single_edge():
    z1 = brute_force_z(1.0, EDGE)
    assert z1 == pytest.approx(2 * math.e**2 + 2 * math.e, rel=1e-12)
    assert z1 == pytest.approx(20.2150, abs=5e-4)


def test_z_matches_direct_sum_on_square():
    beta = 0.7
    direct = sum(
        math.exp(-beta * hamiltonian(bits, SQUARE))
        for bits in itertools.product((0, 1), repeat=4)
    )
    assert brute_force_z(beta, SQUARE) == pytest.approx(direct, rel=1e-12)


def test_enumeration_cap():
    big = LatticeGraph.lattice(5, 5)
    with pytest.raises(EnumerationCapError):
        brute_force_log_z(1.0, big)


# -- exact sampler ---------------------------------------------------------


def test_sampler_uniform_at_zero_temperature():
    rng = rng_stream(8)
    draws = 30_000
    idx = np.zeros(16, dtype=int)
    weights = 1 << np.arange(4)
    for _ in range(draws):
        x = exact_gibbs_sample(0.0, SQUARE, rng)
        idx[int(np.dot(x, weights))] += 1
    chi2 = np.sum((idx - draws / 16) ** 2 / (draws / 16))
    assert chi2 < stats.chi2.ppf(0.999, df=15)


def test_sampler_single_edge_agreement_probability():
    rng = rng_stream(9)
    draws = 30_000
    agree = sum(
        int(x[0] == x[1]) for x in (exact_gibbs_sample(1.0, EDGE, rng) for _ in range(draws))
    )
    p = 2 * math.e**2 / (2 * math.e**2 + 2 * math.e)
    assert p == pytest.approx(0.7311, abs=1e-4)
    assert agree / draws == pytest.approx(p, abs=0.01)


def test_sampler_ground_state_limit():
    rng = rng_stream(10)
    assert all(
        x[0] == x[1] for x in (exact_gibbs_sample(10.0, EDGE, rng) for _ in range(500))
    )


def test_level_sampler_matches_config_sampler():
    rng = rng_stream(11)
    levels = sample_energy_levels(1.0, SQUARE, 20_000, rng)
    p_hat = np.mean(levels == 5)  # all-agree states
    p = 2 * math.exp(5.0) / brute_force_z(1.0, SQUARE)
    assert p_hat == pytest.approx(p, abs=0.02)


# -- shrink step ------------------------------------------------------------


def test_beta_update_arithmetic():
    # all-zeros on 4x4 has -H = 25; Y = e^{12.5} maps to beta_next = 0.5
    assert beta_update(25.0, 1.0, math.exp(12.5)) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        beta_update(0.5, 1.0, 0.3)


def test_beta_update_round_trip_identity():
    # exp(-beta_next * H(x)) == Y up to floating tolerance
    rng = rng_stream(12)
    for _ in range(200):
        neg_h = float(rng.integers(1, 26))
        beta_i = float(rng.uniform(0.1, 3.0))
        y = float(rng.uniform(0.0, math.exp(beta_i * neg_h)))
        if y == 0.0:
            continue
        beta_next = beta_update(neg_h, beta_i, y)
        assert math.exp(beta_next * neg_h) == pytest.approx(y, rel=1e-12)


def test_gibbs_step_shrinks_strictly():
    rng = rng_stream(13)
    x = np.zeros(4, dtype=int)
    for _ in range(100):
        nxt = gibbs_shrink_step(x, SQUARE, 1.0, rng)
        assert nxt < 1.0


# -- run law against the oracle ---------------------------------------------


def test_run_counts_poisson_on_square():
    fam = GibbsFamily(SQUARE, beta=2.0)
    lam = brute_force_log_z(2.0, SQUARE) - 4 * math.log(2.0)
    traces = run_batch(fam, 3000, seed=14)
    counts = [t.count for t in traces]
    assert poisson_count_test(counts, lam).passed
    assert np.mean(counts) == pytest.approx(lam, abs=4 * math.sqrt(lam / 3000))


def test_spacings_exponential_with_oracle():
    fam = GibbsFamily(SQUARE, beta=3.0)
    pool = pool_runs(run_batch(fam, 400, seed=15), fam)
    report = spacing_diagnostic(pool, fam, significance=0.001)
    assert report.passed and not report.low_power


# -- expected cost -----------------------------------------------------------


def test_expected_cost_examples():
    assert expected_run_cost(0.0, SQUARE) == pytest.approx(1.0, abs=1e-12)
    cost = expected_run_cost(1.0, EDGE)
    assert cost == pytest.approx(1 + math.log(2 * math.e**2 + 2 * math.e) - 2 * math.log(2))
    assert cost == pytest.approx(2.6201, abs=5e-4)


def test_observed_mean_run_length_matches_cost():
    g = LatticeGraph.lattice(4, 4)
    fam = GibbsFamily(g, beta=1.0)
    traces = run_batch(fam, 2000, seed=16)
    # samples per run = interior steps + the final draw that crosses zero
    mean_samples = np.mean([t.count + 1 for t in traces])
    assert mean_samples == pytest.approx(expected_run_cost(1.0, g), rel=0.05)


def test_family_validation_and_oracle():
    with pytest.raises(ValueError):
        GibbsFamily(SQUARE, beta=0.0)
    fam = GibbsFamily(SQUARE, beta=1.5)
    assert fam.has_log_measure
    assert fam.log_measure(0.0) == pytest.approx(4 * math.log(2.0), rel=1e-12)
