import numpy as np
import pytest

from emocircle.circle import CircleConfig, map_batch
from emocircle.data import (
    DataFormatError,
    Dataset,
    format_csv,
    load_csv,
    save_csv,
    split,
    synth_generate,
)

HEADER = "id,f1,f2,d1,d2,d3,d4,d5,d6,d7,d8"


def write(tmp_path, body, name="data.csv"):
    path = tmp_path / name
    path.write_text(body, encoding="utf-8")
    return path


def test_three_row_round_trip(tmp_path):
    text = "\n".join([
        HEADER,
        "a,0.5,-1.25,1.0,0.0,0.0,0.0,0.0,0.0,0.0,0.0",
        "b,0.1,0.2,0.25,0.25,0.25,0.25,0.0,0.0,0.0,0.0",
        "c_2,3.0,4.0,0.125,0.125,0.125,0.125,0.125,0.125,0.125,0.125",
    ]) + "\n"
    ds = load_csv(write(tmp_path, text))
    assert len(ds) == 3 and ds.feature_dim == 2 and ds.category_count == 8
    assert ds.ids == ("a", "b", "c_2")
    assert format_csv(ds) == text


def test_near_simplex_row_is_renormalized(tmp_path):
    row = "x,1.0,2.0,0.499999,0.5,0.0,0.0,0.0,0.0,0.0,0.0"
    ds = load_csv(write(tmp_path, f"{HEADER}\n{row}\n"))
    assert ds.distributions[0].sum() == pytest.approx(1.0, abs=1e-15)
    assert ds.distributions[0, 0] == pytest.approx(0.499999 / 0.999999, abs=1e-15)


def test_exact_row_is_kept_verbatim(tmp_path):
    row = "x,1.0,2.0,0.1,0.2,0.7,0.0,0.0,0.0,0.0,0.0"
    ds = load_csv(write(tmp_path, f"{HEADER}\n{row}\n"))
    assert ds.distributions[0, :3].tolist() == [0.1, 0.2, 0.7]


@pytest.mark.parametrize("row, message", [
    ("x,1.0,2.0,-0.1,1.1,0.0,0.0,0.0,0.0,0.0,0.0", "line 3: negative"),
    ("x,1.0,2.0,0.5,0.49,0.0,0.0,0.0,0.0,0.0,0.0", "line 3: degrees sum"),
    ("x,1.0,2.0,0.5,0.5,0.0,0.0,0.0,0.0,0.0", "line 3: expected 11 columns"),
    ("x,1.0,nan,1.0,0.0,0.0,0.0,0.0,0.0,0.0,0.0", "line 3: non-finite"),
    ("x,1.0,abc,1.0,0.0,0.0,0.0,0.0,0.0,0.0,0.0", "line 3:"),
    ("x y,1.0,2.0,1.0,0.0,0.0,0.0,0.0,0.0,0.0,0.0", "line 3: invalid id"),
])
def test_bad_rows_report_line(tmp_path, row, message):
    good = "ok,0.0,0.0,1.0,0.0,0.0,0.0,0.0,0.0,0.0,0.0"
    with pytest.raises(DataFormatError, match=message):
        load_csv(write(tmp_path, f"{HEADER}\n{good}\n{row}\n"))


def test_bad_files(tmp_path):
    with pytest.raises(DataFormatError):
        load_csv(write(tmp_path, ""))
    with pytest.raises(DataFormatError):
        load_csv(write(tmp_path, HEADER + "\n"))
    with pytest.raises(DataFormatError):
        load_csv(write(tmp_path, "name,f1,d1,d2\nx,1,0.5,0.5\n"))
    dup = f"{HEADER}\n" + "a,0,0,1,0,0,0,0,0,0,0\n" * 2
    with pytest.raises(DataFormatError, match="unique"):
        load_csv(write(tmp_path, dup))


def test_column_count_must_match_config(tmp_path):
    path = write(tmp_path, f"{HEADER}\na,0,0,1,0,0,0,0,0,0,0\n")
    assert load_csv(path, CircleConfig.mikels()).category_names[0] == "amusement"
    with pytest.raises(DataFormatError):
        load_csv(path, CircleConfig.with_count(6))


def test_dataset_is_read_only():
    ds = synth_generate(5, 3, seed=1)
    with pytest.raises(ValueError):
        ds.features[0, 0] = 1.0


# -- split -----------------------------------------------------------------


def test_split_sizes():
    ds = synth_generate(10, 2, seed=0)
    train, test = split(ds, seed=3)
    assert (len(train), len(test)) == (8, 2)
    train, test = split(synth_generate(11, 2), seed=3)
    assert (len(train), len(test)) == (9, 2)


def test_split_is_deterministic_partition():
    ds = synth_generate(57, 2, seed=5)
    a = split(ds, seed=9)
    b = split(ds, seed=9)
    assert a[0].ids == b[0].ids and a[1].ids == b[1].ids
    assert not set(a[0].ids) & set(a[1].ids)
    assert sorted(a[0].ids + a[1].ids) == sorted(ds.ids)
    assert split(ds, seed=10)[0].ids != a[0].ids


def test_split_errors():
    ds = synth_generate(1, 2)
    with pytest.raises(ValueError):
        split(ds)
    with pytest.raises(ValueError):
        split(synth_generate(4, 2), train_fraction=1.0)


# -- synthetic generator ---------------------------------------------------


def test_synth_is_deterministic():
    a = synth_generate(50, 4, seed=12)
    b = synth_generate(50, 4, seed=12)
    assert format_csv(a) == format_csv(b)
    assert format_csv(a) != format_csv(synth_generate(50, 4, seed=13))


def test_synth_support_is_contiguous():
    ds = synth_generate(300, 4, concentration=2.0, seed=2, max_support=3)
    for row in ds.distributions:
        support = np.flatnonzero(row > 0)
        assert 1 <= support.size <= 3
        # adjacent on the circle: some rotation makes the support a run
        assert any(
            set(support) == {(s + k) % 8 for k in range(support.size)} for s in support
        )


def test_single_position_maps_near_unit_intensity():
    ds = synth_generate(200, 4, concentration=1e6, seed=4, max_support=1)
    r = map_batch(ds.distributions, CircleConfig()).intensity
    assert np.all(np.abs(r - 1.0) < 1e-12)


def test_contiguous_support_has_higher_intensity():
    circle = CircleConfig()
    near = synth_generate(2000, 4, concentration=2.0, seed=6, max_support=3)
    spread = synth_generate(2000, 4, concentration=2.0, seed=6, max_support=3,
                            contiguous=False)
    r_near = map_batch(near.distributions, circle).intensity.mean()
    r_spread = map_batch(spread.distributions, circle).intensity.mean()
    assert r_near > r_spread


def test_noise_free_features_are_linear_in_distribution():
    ds = synth_generate(40, 8, noise=0.0, seed=3)
    solved, *_ = np.linalg.lstsq(ds.distributions, ds.features, rcond=None)
    assert np.allclose(ds.distributions @ solved, ds.features, atol=1e-10)


@pytest.mark.parametrize("kw", [
    dict(n=0), dict(feature_dim=0), dict(concentration=0.0), dict(noise=-1.0),
    dict(max_support=9), dict(category_count=1),
])
def test_synth_rejects_bad_parameters(kw):
    args = dict(n=5, feature_dim=2)
    args.update(kw)
    with pytest.raises(ValueError):
        synth_generate(**args)


def test_save_load_save_is_byte_identical(tmp_path):
    ds = synth_generate(64, 5, seed=8)
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    save_csv(ds, first)
    back = load_csv(first)
    save_csv(back, second)
    assert first.read_bytes() == second.read_bytes()
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.distributions, ds.distributions)


def test_dataset_validation():
    with pytest.raises(DataFormatError):
        Dataset((), np.zeros((0, 2)), np.zeros((0, 8)), tuple("abcdefgh"))
    with pytest.raises(DataFormatError):
        Dataset(("a",), np.zeros((1, 2)), np.full((1, 8), 0.2), tuple("abcdefgh"))
