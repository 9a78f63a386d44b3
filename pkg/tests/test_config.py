import pytest

from dyspill.config import RunConfig, apply_overrides, load_config, parse_ranges, parse_windows
from dyspill.errors import ConfigError, InfeasibleWindowError
from dyspill.fixtures import fixture_path


def test_defaults_follow_the_analysis():
    c = RunConfig()
    assert c.windows == tuple(range(30, 41))
    assert (c.fixed_order, c.horizon, c.winsorize, c.method) == (1, 10, 0.01, "generalized")
    assert c.seed == 0
    assert c.reference_window == 35
    assert c.exclusions == ((1628, 1648),)


def test_parsers():
    assert parse_windows("30-33, 38,40") == (30, 31, 32, 33, 38, 40)
    assert parse_ranges("1628-1648, 1700") == ((1628, 1648), (1700, 1700))
    for bad in ("", "40-30", "x"):
        with pytest.raises(ConfigError):
            parse_windows(bad)


def test_order_forms():
    assert RunConfig(order="auto(aic)").criterion == "aic"
    assert RunConfig(order="auto").criterion == "bic"
    assert RunConfig(order="auto(hq)").fixed_order is None
    assert RunConfig(order="2").fixed_order == 2


def test_load_fixture_resolves_paths():
    c = load_config(fixture_path("run.cfg"))
    assert c.panel == str(fixture_path("panel.csv"))
    assert c.order == "auto(bic)"
    assert c.n_boot == 100 and c.sea_n_boot == 2000 and c.seed == 2024
    c.validate(3, 231)


def test_precedence(tmp_path):
    path = tmp_path / "a.cfg"
    path.write_text("[model]\nhorizon = 12\n[run]\nseed = 5\n")
    assert load_config(path).horizon == 12
    assert load_config(path, {"model.horizon": "7"}).horizon == 7
    assert load_config(path, {"model.horizon": "7"}, horizon=3).horizon == 3
    assert load_config(path, seed=None).seed == 5
    assert apply_overrides(RunConfig(), seed=9, horizon=None).horizon == 10


def test_unknown_keys_and_sections(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("[model]\nhorizn = 3\n")
    with pytest.raises(ConfigError, match="horizn"):
        load_config(p)
    p.write_text("[modle]\nhorizon = 3\n")
    with pytest.raises(ConfigError, match="modle"):
        load_config(p)
    with pytest.raises(ConfigError):
        load_config(None, {"horizon": "3"})
    with pytest.raises(ConfigError):
        load_config(None, {"model.horizon": "ten"})
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


@pytest.mark.parametrize(
    "kw",
    [
        {"panel": "/no/such/file.csv"},
        {"horizon": 0},
        {"windows": ()},
        {"method": "sims"},
        {"winsorize": 0.6},
        {"order": "zero"},
        {"retain": 2.0, "highlight": 1.0},
        {"quantiles": (0.5, 1.0)},
        {"sea_n_boot": 50},
        {"sea_variants": ("end",)},
        {"formats": ("gexf",)},
        {"gap_policy": "loose"},
    ],
)
def test_validation_rejects(kw):
    with pytest.raises(ConfigError):
        RunConfig(**kw).validate()


def test_window_arithmetic_checked():
    with pytest.raises(InfeasibleWindowError, match="rank-deficient"):
        RunConfig(windows=(5,)).validate(n_locations=14)
    RunConfig().validate(n_locations=14)
    with pytest.raises(InfeasibleWindowError):
        RunConfig(order="2").validate(n_locations=14)  # 30-year windows need 46 at p=2


def test_digest_ignores_output_and_workers():
    a = RunConfig(output="x", workers=1).digest()
    assert a == RunConfig(output="y", workers=8).digest()
    assert a != RunConfig(seed=1).digest()
