import numpy as np
import pytest

from wpcn.channel import NetworkConfig
from wpcn.experiments import (
    ExperimentSpec,
    emit_plot,
    fig1_spec,
    fig2_spec,
    parse_config_text,
    read_table,
    run_fig1_experiment,
    run_fig2_experiment,
    spec_from_mapping,
)
from wpcn.protocol import run

SMALL = dict(M=800, seeds=(1, 2))


def test_spec_validation():
    with pytest.raises(ValueError, match="modes"):
        fig1_spec(modes=())
    with pytest.raises(ValueError, match="values"):
        fig1_spec(values=())
    with pytest.raises(ValueError, match="values"):
        fig1_spec(values=(0.0, 2e-5, 1e-5))
    with pytest.raises(ValueError, match="values"):
        fig1_spec(values=(0.0, 0.0))
    with pytest.raises(ValueError, match="K_values"):
        fig1_spec(K_values=(6,))
    with pytest.raises(ValueError, match="sweep"):
        ExperimentSpec(name="x", sweep="eta", values=(1.0,))
    with pytest.raises(ValueError, match="seeds"):
        fig2_spec(seeds=())


def test_average_power_sweep_ties_peak_power():
    spec = fig2_spec(values=(0.5, 2.0), fixed_p_c=(0.0,), K_values=(2,))
    cfgs = [cfg for _, cfg in spec.configs()]
    assert [c.P_max for c in cfgs] == [2.5, 10.0]
    assert all(c.distances == (10.0, 10.0) for c in cfgs)


def test_fig1_csv_rows_and_reproducibility():
    spec = fig1_spec(values=(0.0, 2e-5), K_values=(3,), **SMALL)
    text = run_fig1_experiment(spec)
    assert text == run_fig1_experiment(spec)  # byte-identical
    lines = text.splitlines()
    assert lines[0] == "p_c,K,mode,sum_rate,jain"
    table = read_table(text)
    assert len(table) == 4
    row = table[3]
    cfg = NetworkConfig(distances=(10.0, 12.5, 15.0), p_c=row["p_c"])
    ref = [run(cfg, 800, seed=s, mode=row["mode"]) for s in (1, 2)]
    assert row["sum_rate"] == np.mean([r.sum_rate for r in ref])
    assert row["jain"] == np.mean([r.jain for r in ref])


def test_fig2_csv_and_wrong_sweep(tmp_path):
    spec = fig2_spec(values=(0.5, 1.0), fixed_p_c=(0.0, 1e-5), K_values=(3,), **SMALL)
    out = tmp_path / "fig2.csv"
    text = run_fig2_experiment(spec, out)
    assert out.read_text() == text
    assert text.splitlines()[0] == "P_avg,p_c,K,mode,sum_rate,jain"
    assert len(read_table(out)) == 8
    with pytest.raises(ValueError):
        run_fig1_experiment(spec)
    with pytest.raises(ValueError):
        run_fig2_experiment(fig1_spec(**SMALL))


def test_plot_curve_counts(tmp_path):
    fig1 = "p_c,K,mode,sum_rate,jain\n" + "".join(
        f"{pc},{K},{m},{1 - pc * 1e4},{0.5}\n"
        for K in (3, 5) for pc in (0, 1e-5) for m in ("pf", "maxsum"))
    svg = tmp_path / "f1.svg"
    assert emit_plot(fig1, svg) == 8  # 4 curves in each of two panels
    body = svg.read_text()
    assert body.startswith("<svg") and body.count('class="curve"') == 8
    fig2 = "P_avg,p_c,K,mode,sum_rate,jain\n" + "".join(
        f"{P},{pc},5,{m},{P},1.0\n"
        for pc in (0, 1e-5, 2e-5) for P in (0.5, 1, 2) for m in ("pf", "maxsum"))
    assert emit_plot(fig2, tmp_path / "f2.svg") == 6


@pytest.mark.parametrize(
    "text",
    ["", "p_c,K,mode,sum_rate,jain\n", "a,b\n1,2\n", "p_c,K,mode,sum_rate,jain\n0,3,pf,1.0\n",
     "p_c,K,mode,sum_rate,jain\n0,3,pf,x,0.5\n", "p_c,K,mode,sum_rate,jain\n0,3,pf,nan,0.5\n"],
)
def test_plot_rejects_malformed(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ValueError):
        emit_plot(path, tmp_path / "bad.svg")


def test_config_parser_and_overrides():
    text = """
    # sweep over circuit power
    values = 0, 1e-5, 5e-5
    modes = pf
    K_values = 2
    M = 1000   # short
    seeds = 4, 5
    eta = 0.4
    """
    m = parse_config_text(text)
    assert m["values"] == ["0", "1e-5", "5e-5"] and m["M"] == "1000"
    spec = spec_from_mapping(m, fig1_spec())
    assert spec.values == (0.0, 1e-5, 5e-5) and spec.K_values == (2,)
    assert spec.seeds == (4, 5) and spec.M == 1000
    assert spec.base.eta == (0.4,) * 5
    with pytest.raises(ValueError, match="unknown"):
        spec_from_mapping({"colour": "red"}, fig1_spec())
    with pytest.raises(ValueError, match="M"):
        spec_from_mapping({"M": "many"}, fig1_spec())
    with pytest.raises(ValueError, match="line 1"):
        parse_config_text("no equals sign")
    with pytest.raises(ValueError, match="duplicate"):
        parse_config_text("M = 1\nM = 2")
