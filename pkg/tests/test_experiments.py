import pytest

from ncdecode.decode import BeamConfig, ScalingConfig, online_decode
from ncdecode.errors import ConfigError
from ncdecode.experiments import (
    budget_curve,
    curve_to_csv,
    default_lambda_grid,
    example_condition,
    liu_factorization,
    sweep,
)
from ncdecode.world import exact_conditional, sample_dataset


@pytest.fixture
def setup(tiny_world):
    scorers = (
        exact_conditional(tiny_world, "direct"),
        exact_conditional(tiny_world, "channel_partial"),
        exact_conditional(tiny_world, "response_lm"),
    )
    examples = sample_dataset(tiny_world, 30, seed=17)
    return scorers, examples


def make_decode_fn(scorers, max_len=4, beam=4):
    direct, channel, lm = scorers

    def decode_fn(example, scaling):
        cond = example_condition(example)
        cfg = BeamConfig(beam=beam, max_len=max_len)
        return online_decode(direct, channel, lm, cond, scaling, cfg)

    return decode_fn


class TestGrid:
    def test_default_lambda_grid(self):
        grid = default_lambda_grid()
        assert grid[0] == 0.0
        assert grid[1] == pytest.approx(0.1)
        assert grid[-1] == pytest.approx(2.0)
        assert len(grid) == 21

    def test_liu_factorization(self):
        assert liu_factorization(1) == (1, 1)
        assert liu_factorization(2) == (2, 1)
        assert liu_factorization(4) == (2, 2)
        assert liu_factorization(8) == (4, 2)
        assert liu_factorization(16) == (4, 4)
        for budget in (1, 2, 4, 6, 8, 9, 12, 16):
            k1, k2 = liu_factorization(budget)
            assert k1 * k2 == budget and k1 >= k2


class TestSweep:
    def test_single_point_is_best(self, setup):
        scorers, examples = setup
        result = sweep(examples, make_decode_fn(scorers), [(0.5, 0.5)])
        assert result.best_point == (0.5, 0.5)
        assert list(result.points) == [(0.5, 0.5)]

    def test_empty_grid_rejected(self, setup):
        scorers, examples = setup
        with pytest.raises(ConfigError):
            sweep(examples, make_decode_fn(scorers), [])

    def test_duplicate_point_rejected(self, setup):
        scorers, examples = setup
        with pytest.raises(ConfigError):
            sweep(examples, make_decode_fn(scorers), [(0.5, 0.5), (0.5, 0.5)])

    def test_decomposable_rerun_reproduces_point(self, setup):
        scorers, examples = setup
        fn = make_decode_fn(scorers)
        full = sweep(examples, fn, [(0.0, 0.5), (1.0, 0.5)])
        single = sweep(examples, fn, [(1.0, 0.5)])
        assert full.points[(1.0, 0.5)].to_dict() == single.points[(1.0, 0.5)].to_dict()

    def test_grounded_point_beats_ungrounded_on_strong_world(self, setup):
        scorers, examples = setup
        result = sweep(examples, make_decode_fn(scorers), [(0.0, 0.5), (1.0, 0.5)])
        f1_at_0 = result.points[(0.0, 0.5)].token_f1_mean
        f1_at_1 = result.points[(1.0, 0.5)].token_f1_mean
        assert f1_at_1 >= f1_at_0

    def test_per_example_failures_recorded(self, setup):
        scorers, examples = setup
        fn = make_decode_fn(scorers)
        poison = examples[3].id

        def flaky(example, scaling):
            if example.id == poison:
                raise RuntimeError("boom")
            return fn(example, scaling)

        result = sweep(examples, flaky, [(0.5, 0.5)])
        assert result.failures[(0.5, 0.5)] == [[poison, "boom"]]
        assert result.points[(0.5, 0.5)].n_examples == len(examples) - 1

        def dead(example, scaling):
            raise RuntimeError("all gone")

        with pytest.raises(ConfigError, match="every example"):
            sweep(examples, dead, [(0.5, 0.5)])


class TestBudgetCurve:
    def test_rows_and_csv(self, setup):
        scorers, examples = setup
        rows = budget_curve(examples[:10], scorers, ScalingConfig(1.0, 0.6, 0.4),
                            budgets=[1, 2], max_len=4)
        kinds = {row["kind"] for row in rows}
        assert kinds == {"direct", "online-ours", "online-liu"}
        liu_rows = [r for r in rows if r["kind"] == "online-liu"]
        assert all("liu_k1" in r["config"] for r in liu_rows)
        csv = curve_to_csv(rows)
        lines = csv.strip().split("\n")
        assert lines[0] == "kind,budget,metric,value"
        assert len(lines) == 1 + len(rows) * 4

    def test_ours_combined_non_decreasing_in_budget(self, setup):
        scorers, examples = setup
        rows = budget_curve(examples[:15], scorers, ScalingConfig(1.0, 0.6, 0.4),
                            budgets=[1, 2, 4, 8], kinds=("online-ours",),
                            max_len=4, length_normalize_final=False)
        means = [row["mean_combined"] for row in rows]
        for lo, hi in zip(means, means[1:]):
            assert hi >= lo - 1e-12

    def test_bad_budget_rejected(self, setup):
        scorers, examples = setup
        with pytest.raises(ConfigError):
            budget_curve(examples, scorers, ScalingConfig(), budgets=[0])
