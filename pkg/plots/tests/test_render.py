"""Plot rendering from aggregate CSVs: fidelity, determinism, validation."""

import os

import numpy as np
import pytest

from cwim_plots import PlotError, PlotSpec, build_figure, load_curves, render

HEADER = "t,algorithm,mean_cum_regret,stderr,mean_reward,reward_stderr"


def write_agg(path, algorithm, t_values, cum, stderr, reward=None, reward_err=None):
    reward = reward if reward is not None else [2.0] * len(t_values)
    reward_err = reward_err if reward_err is not None else [0.0] * len(t_values)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(HEADER + "\n")
        for row in zip(t_values, cum, stderr, reward, reward_err):
            t, c, s, rw, re_ = row
            fh.write(f"{t},{algorithm},{c!r},{s!r},{rw!r},{re_!r}\n")
    return str(path)


def toy_like_csvs(tmp_path):
    """Two-algorithm aggregate pair shaped like the toy experiment output."""
    t_values = list(range(1, 2001))
    rng = np.random.default_rng(7)
    paths = []
    for name, slope in (("cw", 0.05), ("imlinucb", 0.09)):
        cum = np.cumsum(rng.normal(slope, 0.5, len(t_values)))
        err = np.abs(rng.normal(1.0, 0.2, len(t_values)))
        paths.append(
            write_agg(tmp_path / f"{name}.csv", name, t_values, cum.tolist(), err.tolist())
        )
    return paths


class TestLoadCurves:
    def test_loads_per_algorithm(self, tmp_path):
        paths = toy_like_csvs(tmp_path)
        curves = load_curves(paths)
        assert [c.algorithm for c in curves] == ["cw", "imlinucb"]
        assert len(curves[0].t) == 2000

    def test_combined_file(self, tmp_path):
        path = tmp_path / "both.csv"
        with open(path, "w") as fh:
            fh.write(HEADER + "\n")
            for t in (1, 2):
                fh.write(f"{t},a,1.0,0.1,2.0,0.0\n")
            for t in (1, 2):
                fh.write(f"{t},b,2.0,0.2,2.0,0.0\n")
        curves = load_curves([str(path)])
        assert sorted(c.algorithm for c in curves) == ["a", "b"]

    def test_header_mismatch(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("not,a,header\n1,a,b,c,d,e\n")
        with pytest.raises(PlotError, match="header"):
            load_curves([str(path)])

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(HEADER + "\n1,a,1.0,0.1\n")
        with pytest.raises(PlotError, match="columns"):
            load_curves([str(path)])

    def test_mismatched_grids(self, tmp_path):
        a = write_agg(tmp_path / "a.csv", "a", [1, 2], [0.0, 1.0], [0.0, 0.0])
        b = write_agg(tmp_path / "b.csv", "b", [1, 3], [0.0, 1.0], [0.0, 0.0])
        with pytest.raises(PlotError, match="grids"):
            load_curves([a, b])

    def test_reward_selector(self, tmp_path):
        path = write_agg(
            tmp_path / "a.csv", "a", [1, 2], [0.0, 1.0], [0.5, 0.5],
            reward=[3.0, 4.0], reward_err=[0.25, 0.5],
        )
        (curve,) = load_curves([path], y="reward")
        assert curve.mean.tolist() == [3.0, 4.0]
        assert curve.stderr.tolist() == [0.25, 0.5]


class TestRender:
    def test_single_algorithm_zero_stderr(self, tmp_path):
        path = write_agg(tmp_path / "a.csv", "a", [1, 2, 3], [0.0, 1.0, 2.0], [0.0] * 3)
        out = str(tmp_path / "fig.png")
        curves = render(PlotSpec(inputs=(path,), output=out))
        assert os.path.exists(out) and len(curves) == 1

    def test_error_bars_equal_stderr_column(self, tmp_path):
        # acceptance-style fidelity check: drawn bar half-lengths at 5 spot
        # rounds equal the stderr column values exactly
        paths = toy_like_csvs(tmp_path)
        spec = PlotSpec(inputs=tuple(paths), output=str(tmp_path / "fig.png"))
        curves = load_curves(paths)
        fig = build_figure(curves, spec)
        ax = fig.axes[0]
        assert len(ax.containers) == len(curves)
        step = max(1, len(curves[0].t) // 20)
        for curve, container in zip(curves, ax.containers):
            segments = container[2][0].get_segments()
            marks = np.arange(0, len(curve.t), step)
            assert len(segments) == len(marks)
            for probe in (0, len(marks) // 4, len(marks) // 2, 3 * len(marks) // 4, len(marks) - 1):
                idx = marks[probe]
                (x0, y_low), (x1, y_high) = segments[probe]
                assert x0 == x1 == curve.t[idx]
                half = (y_high - y_low) / 2.0
                assert half == pytest.approx(curve.stderr[idx], rel=1e-12, abs=1e-15)
                center = (y_high + y_low) / 2.0
                assert center == pytest.approx(curve.mean[idx], rel=1e-12, abs=1e-12)

    def test_deterministic_png_bytes(self, tmp_path):
        paths = toy_like_csvs(tmp_path)
        out_a = str(tmp_path / "a.png")
        out_b = str(tmp_path / "b.png")
        render(PlotSpec(inputs=tuple(paths), output=out_a, title="toy"))
        render(PlotSpec(inputs=tuple(paths), output=out_b, title="toy"))
        assert open(out_a, "rb").read() == open(out_b, "rb").read()

    def test_deterministic_svg_bytes(self, tmp_path):
        paths = toy_like_csvs(tmp_path)
        out_a = str(tmp_path / "a.svg")
        out_b = str(tmp_path / "b.svg")
        render(PlotSpec(inputs=tuple(paths), output=out_a))
        render(PlotSpec(inputs=tuple(paths), output=out_b))
        assert open(out_a, "rb").read() == open(out_b, "rb").read()

    def test_bad_y_selector(self, tmp_path):
        with pytest.raises(PlotError):
            PlotSpec(inputs=("x.csv",), output="fig.png", y="nope")

    def test_reward_plot_bounded_range(self, tmp_path):
        # reward curves live in [K, n]; the plotted values are exactly the CSV's
        path = write_agg(
            tmp_path / "a.csv", "a", [1, 2, 3], [0.0, 0.0, 0.0], [0.0] * 3,
            reward=[2.0, 3.5, 4.0], reward_err=[0.1, 0.1, 0.1],
        )
        curves = render(PlotSpec(inputs=(path,), output=str(tmp_path / "r.png"), y="reward"))
        assert curves[0].mean.min() >= 2.0 and curves[0].mean.max() <= 4.0
