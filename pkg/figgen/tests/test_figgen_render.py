"""Figure construction: per-kind content, axis units, overlays, determinism."""

import math
from pathlib import Path

import numpy as np
import pytest

from figgen.figures import FigureSpec, build_figure, render
from figgen.readers import AU_TIME_FS

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


# -- synthetic inputs ---------------------------------------------------------


def make_density_csv(path, shuffle_seed=None):
    z = np.linspace(-2.0, 2.0, 9)
    r = np.linspace(1.0, 3.0, 5)
    rows = []
    for rv in r:
        for zv in z:
            dens = np.exp(-(zv**2) - ((rv - 2.0) ** 2) / 0.5)
            rows.append((float(zv), float(rv), float(dens)))
    if shuffle_seed is not None:
        rng = np.random.default_rng(shuffle_seed)
        rng.shuffle(rows)
    lines = ["z_au,R_au,density"]
    lines += [f"{a!r},{b!r},{c!r}" for a, b, c in rows]
    path.write_text("\n".join(lines) + "\n")
    return str(path), z, r


def make_stats_csv(path, n=40, with_sigma=True):
    t = np.linspace(0.0, 800.0, n)
    mean_r = 2.0 + 0.02 * t
    sigma = 0.3 + 0.001 * t
    header = "t_au,t_fs,norm,mean_R,sigma_R,energy" if with_sigma else "t_au,mean_R"
    lines = [header]
    for i in range(n):
        ti, mi, si = float(t[i]), float(mean_r[i]), float(sigma[i])
        if with_sigma:
            lines.append(f"{ti!r},{ti * AU_TIME_FS!r},1.0,{mi!r},{si!r},-0.6")
        else:
            lines.append(f"{ti!r},{mi!r}")
    path.write_text("\n".join(lines) + "\n")
    return str(path), t, mean_r


def make_field_csv(path, n=60):
    t = np.linspace(560.0, 620.0, n)
    a = 0.06 * np.sin(1.0 * (t - 560.0)) * np.sin(np.pi * (t - 560.0) / 60.0) ** 2
    lines = ["t_au,A_au"] + [f"{float(t[i])!r},{float(a[i])!r}" for i in range(n)]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def make_yield_csv(path, n=12, with_omega=False):
    tau = np.linspace(600.0, 1150.0, n)
    y = 0.002 * (1.0 + 0.4 * np.cos(0.036 * tau + 1.0))
    header = "delay_au,delay_fs,yield,k0,delta_k"
    if with_omega:
        header += ",omega_au"
    lines = ["# synthetic delay scan", header]
    for i in range(n):
        ti, yi = float(tau[i]), float(y[i])
        row = f"{ti!r},{ti * AU_TIME_FS!r},{yi!r},1.6,0.08"
        if with_omega:
            row += ",0.036"
        lines.append(row)
    path.write_text("\n".join(lines) + "\n")
    return str(path), tau, y


def make_fit_curve_csv(path, n_data=10, n_dense=50):
    tau_d = np.linspace(600.0, 1100.0, n_data)
    tau_m = np.linspace(600.0, 1100.0, n_dense)

    def model(tau):
        return 0.002 * (1.0 + 0.5 * math.cos(0.036 * tau + 1.0))

    rows = []
    for t in map(float, tau_d):
        rows.append((t, model(t) * 1.01, model(t), 0.003, 0.001))
    for t in map(float, tau_m):
        rows.append((t, None, model(t), 0.003, 0.001))
    rows.sort(key=lambda r: r[0])
    lines = ["tau,data,model,envelope_hi,envelope_lo"]
    for t, d, m, hi, lo in rows:
        dcell = "" if d is None else repr(d)
        lines.append(f"{t!r},{dcell},{m!r},{hi!r},{lo!r}")
    path.write_text("\n".join(lines) + "\n")
    return str(path), tau_d


def _scatter_collections(ax):
    from matplotlib.collections import PathCollection

    return [c for c in ax.collections if isinstance(c, PathCollection)]


# -- density ------------------------------------------------------------------


def test_density_figure_grid_is_order_independent(tmp_path):
    p_sorted, z, r = make_density_csv(tmp_path / "a.csv")
    p_shuffled, _, _ = make_density_csv(tmp_path / "b.csv", shuffle_seed=7)

    from matplotlib.collections import QuadMesh

    arrays = []
    for p in (p_sorted, p_shuffled):
        fig = build_figure(FigureSpec(kind="density", inputs=(p,), output="x.png"))
        meshes = [c for c in fig.axes[0].collections if isinstance(c, QuadMesh)]
        assert len(meshes) == 1
        arrays.append(np.asarray(meshes[0].get_array()))
    assert np.array_equal(arrays[0], arrays[1])
    expected = np.exp(-(z[None, :] ** 2) - ((r[:, None] - 2.0) ** 2) / 0.5)
    assert np.allclose(arrays[0].reshape(r.size, z.size), expected)


def test_density_axis_labels_in_atomic_units(tmp_path):
    p, _, _ = make_density_csv(tmp_path / "d.csv")
    fig = build_figure(FigureSpec(kind="density", inputs=(p,), output="x.png"))
    ax = fig.axes[0]
    assert "z" in ax.get_xlabel() and "(a.u.)" in ax.get_xlabel()
    assert "R" in ax.get_ylabel() and "(a.u.)" in ax.get_ylabel()


# -- meanR --------------------------------------------------------------------


def test_mean_r_figure_line_and_band(tmp_path):
    p, t, mean_r = make_stats_csv(tmp_path / "stats.csv")
    fig = build_figure(FigureSpec(kind="meanR", inputs=(p,), output="x.png"))
    ax = fig.axes[0]
    (line,) = ax.lines
    assert np.allclose(line.get_xdata(), t * AU_TIME_FS)
    assert np.allclose(line.get_ydata(), mean_r)
    assert "fs" in ax.get_xlabel()
    assert "(a.u.)" in ax.get_ylabel()
    # +/- sigma band present
    assert len(ax.collections) >= 1


def test_mean_r_figure_without_sigma_column(tmp_path):
    p, t, mean_r = make_stats_csv(tmp_path / "stats.csv", with_sigma=False)
    fig = build_figure(FigureSpec(kind="meanR", inputs=(p,), output="x.png"))
    ax = fig.axes[0]
    assert len(ax.lines) == 1
    assert len(ax.collections) == 0


def test_mean_r_figure_field_trace_inset(tmp_path):
    p_stats, _, _ = make_stats_csv(tmp_path / "stats.csv")
    p_field = make_field_csv(tmp_path / "field.csv")
    fig = build_figure(
        FigureSpec(kind="meanR", inputs=(p_stats, p_field), output="x.png")
    )
    ax = fig.axes[0]
    assert len(ax.child_axes) == 1
    inset = ax.child_axes[0]
    assert "A" in inset.get_ylabel() and "(a.u.)" in inset.get_ylabel()
    assert "fs" in inset.get_xlabel()
    assert len(inset.lines) == 1


# -- yield --------------------------------------------------------------------


def test_yield_figure_three_rows_give_three_scatter_points(tmp_path):
    p, tau, y = make_yield_csv(tmp_path / "yield.csv", n=3)
    fig = build_figure(FigureSpec(kind="yield", inputs=(p,), output="x.png"))
    ax = fig.axes[0]
    scatters = _scatter_collections(ax)
    assert len(scatters) == 1
    offsets = np.asarray(scatters[0].get_offsets())
    assert offsets.shape == (3, 2)
    assert np.allclose(np.sort(offsets[:, 0]), np.sort(tau * AU_TIME_FS))
    assert "fs" in ax.get_xlabel()
    assert "yield" in ax.get_ylabel()


def test_yield_figure_tolerates_omega_column_presence_or_absence(tmp_path):
    p_with, _, _ = make_yield_csv(tmp_path / "with.csv", with_omega=True)
    p_without, _, _ = make_yield_csv(tmp_path / "without.csv", with_omega=False)
    for p in (p_with, p_without):
        fig = build_figure(FigureSpec(kind="yield", inputs=(p,), output="x.png"))
        assert len(_scatter_collections(fig.axes[0])) == 1


def test_yield_figure_sorts_by_delay(tmp_path):
    path = tmp_path / "yield.csv"
    path.write_text(
        "delay_au,yield\n700.0,0.2\n600.0,0.1\n800.0,0.3\n"
    )
    fig = build_figure(FigureSpec(kind="yield", inputs=(str(path),), output="x.png"))
    (line,) = fig.axes[0].lines
    assert np.all(np.diff(line.get_xdata()) > 0)


# -- fit ----------------------------------------------------------------------


def test_fit_figure_overlays_data_model_and_envelope(tmp_path):
    p, tau_d = make_fit_curve_csv(tmp_path / "fit_curve.csv")
    fig = build_figure(FigureSpec(kind="fit", inputs=(p,), output="x.png"))
    ax = fig.axes[0]

    scatters = _scatter_collections(ax)
    assert len(scatters) == 1
    offsets = np.asarray(scatters[0].get_offsets())
    assert offsets.shape[0] == tau_d.size  # only rows with data become points

    assert len(ax.lines) == 3  # model + upper/lower envelope
    labels = [ln.get_label() for ln in ax.lines]
    assert "model" in labels and "envelope" in labels

    by_label = {ln.get_label(): ln for ln in ax.lines}
    model_y = by_label["model"].get_ydata()
    env_y = by_label["envelope"].get_ydata()
    others = [ln for ln in ax.lines if ln.get_label().startswith("_")]
    assert len(others) == 1
    lo_y = others[0].get_ydata()
    assert np.all(model_y <= env_y + 1e-15)
    assert np.all(lo_y <= model_y + 1e-15)

    legend_texts = [t.get_text() for t in ax.get_legend().get_texts()]
    assert {"data", "model", "envelope"} <= set(legend_texts)

    # delay axis displayed in femtoseconds
    assert "fs" in ax.get_xlabel()
    assert np.isclose(np.max(by_label["model"].get_xdata()), 1100.0 * AU_TIME_FS)


# -- spec handling, rendering, determinism ------------------------------------


def test_spec_rejects_unknown_kind_and_bad_input_counts(tmp_path):
    with pytest.raises(ValueError, match="unknown figure kind"):
        FigureSpec(kind="surface", inputs=("a.csv",), output="x.png")
    with pytest.raises(ValueError, match="input CSV"):
        FigureSpec(kind="yield", inputs=("a.csv", "b.csv"), output="x.png")
    with pytest.raises(ValueError, match="input CSV"):
        FigureSpec(kind="meanR", inputs=(), output="x.png")
    with pytest.raises(ValueError, match="input CSV"):
        FigureSpec(kind="fit", inputs=("a", "b"), output="x.png")


def test_axis_ranges_and_title_applied(tmp_path):
    p, _, _ = make_yield_csv(tmp_path / "yield.csv")
    fig = build_figure(
        FigureSpec(
            kind="yield",
            inputs=(p,),
            output="x.png",
            xlim=(10.0, 30.0),
            ylim=(0.0, 0.01),
            title="scan",
        )
    )
    ax = fig.axes[0]
    assert ax.get_xlim() == (10.0, 30.0)
    assert ax.get_ylim() == (0.0, 0.01)
    assert ax.get_title() == "scan"


def test_render_writes_png(tmp_path):
    p, _, _ = make_yield_csv(tmp_path / "yield.csv")
    out = tmp_path / "figs" / "yield.png"  # parent dir created on demand
    result = render(FigureSpec(kind="yield", inputs=(p,), output=str(out)))
    assert result == out
    blob = out.read_bytes()
    assert blob.startswith(PNG_MAGIC)
    assert len(blob) > 1000


def test_render_is_deterministic(tmp_path):
    p, _, _ = make_stats_csv(tmp_path / "stats.csv")
    out1 = tmp_path / "a.png"
    out2 = tmp_path / "b.png"
    render(FigureSpec(kind="meanR", inputs=(p,), output=str(out1)))
    render(FigureSpec(kind="meanR", inputs=(p,), output=str(out2)))
    assert out1.read_bytes() == out2.read_bytes()


# -- end to end on real pipeline outputs --------------------------------------


def test_renders_pipeline_outputs_end_to_end(tmp_path, acceptance_report):
    cache = Path(__file__).resolve().parents[2] / "tests" / "_acceptance_cache"
    sources = {
        "meanR": cache / "dissociation" / "stats.csv",
        "yield": cache / "scan" / "yield.csv",
        "fit": cache / "scan" / "fit_curve.csv",
    }
    missing = [f"{k} ({v})" for k, v in sources.items() if not v.exists()]
    if missing:
        pytest.skip("pipeline outputs not built yet: " + "; ".join(missing))

    details = []
    for kind, src in sources.items():
        out = tmp_path / f"{kind}.png"
        fig = build_figure(FigureSpec(kind=kind, inputs=(str(src),), output=str(out)))
        ax = fig.axes[0]
        assert "fs" in ax.get_xlabel()
        assert "(a.u.)" in ax.get_ylabel() or "yield" in ax.get_ylabel()
        if kind == "fit":
            labels = [ln.get_label() for ln in ax.lines]
            assert "model" in labels and "envelope" in labels
            assert len(_scatter_collections(ax)) == 1
        render(FigureSpec(kind=kind, inputs=(str(src),), output=str(out)))
        assert out.read_bytes().startswith(PNG_MAGIC)
        details.append(f"{kind}<-{src.name}")

    acceptance_report(
        "figure generation from pipeline outputs",
        True,
        "rendered " + ", ".join(details) + "; time axes in fs, fit overlay has "
        "data points, model curve and envelope",
    )
