import numpy as np
import pytest

from wavescale.pipeline import io
from wavescale.pipeline.preprocess import (MEDIAN_TRAITS, QUARTILE_TRAITS, PreprocessError, StageTrace,
                                           categorize, clean_and_average, filter_trait_outliers,
                                           remove_zero_traits, standardize, to_absorbance, truncate_pow2)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


SPECTRA = """sample_id,animal_id,1000,1001,1002,1003,1004
s1,a1,0.1,0.2,0.3,0.4,0.5
s2,a1,0.3,0.4,0.5,0.6,0.7
s3,a2,0.9,0.8,0.7,0.6,0.5
"""


def spectra_table(values, animals=None):
    values = np.asarray(values, dtype=float)
    ids = [f"s{i}" for i in range(len(values))]
    return io.SpectraTable(ids, animals or ids, np.arange(values.shape[1], dtype=float), values)


def test_load_well_formed(tmp_path):
    t = io.load_spectra_csv(write(tmp_path, "s.csv", SPECTRA))
    assert t.values.shape == (3, 5)
    assert t.animal_id == ["a1", "a1", "a2"]
    assert t.mode == "transmittance"
    assert list(t.wavenumbers) == [1000, 1001, 1002, 1003, 1004]


def test_comment_lines_skipped(tmp_path):
    t = io.load_spectra_csv(write(tmp_path, "s.csv", "# produced by hand\n" + SPECTRA), mode="absorbance")
    assert len(t) == 3 and t.mode == "absorbance"


@pytest.mark.parametrize("text,match", [
    (SPECTRA.replace("s3,a2,0.9,0.8,0.7,0.6,0.5", "s3,a2,0.9,0.8,0.7,0.6"), "row 4 has 6 cells"),
    (SPECTRA.replace("s2,a1", "s1,a1"), "duplicate sample_id 's1'"),
    (SPECTRA.replace("0.4,0.5,0.6", "0.4,abc,0.6"), "non-numeric cell 'abc' at row 3, column 5"),
    (SPECTRA.replace("1002,1003", "1003,1002"), "not strictly increasing"),
    (SPECTRA.replace("0.9,0.8", "nan,0.8"), "non-finite"),
    ("sample_id,animal_id,1\n", "no data rows"),
    ("", "empty file"),
])
def test_load_errors(tmp_path, text, match):
    with pytest.raises(io.InputError, match=match):
        io.load_spectra_csv(write(tmp_path, "s.csv", text))


def test_traits_missing_cells(tmp_path):
    t = io.load_traits_csv(write(tmp_path, "t.csv", "animal_id,RCT,pH\na1,12.5,\na2,,6.6\n"))
    assert t.names == ["RCT", "pH"]
    assert np.isnan(t.column("RCT")[1]) and np.isnan(t.column("pH")[0])
    with pytest.raises(io.InputError, match="duplicate trait"):
        io.load_traits_csv(write(tmp_path, "t2.csv", "animal_id,RCT,RCT\na1,1,2\n"))


def test_write_and_read_table(tmp_path):
    p = io.write_csv(tmp_path / "x.csv", ["a", "b"], [[1.5, float("nan")], ["z", np.int64(3)]],
                     {"seed": 7, "config": {"k": [1, 2]}})
    meta, rows = io.read_table(p)
    assert meta == {"seed": 7, "config": {"k": [1, 2]}}
    assert rows == [{"a": "1.5", "b": ""}, {"a": "z", "b": "3"}]
    assert not list(tmp_path.glob(".*tmp"))


def test_json_nan_is_null(tmp_path):
    p = io.write_json(tmp_path / "x.json", {"b": float("nan"), "a": np.float64(1.0)})
    assert p.read_text() == '{\n  "a": 1.0,\n  "b": null\n}\n'


@pytest.mark.parametrize("T,A", [(1.0, 0.0), (0.01, 2.0)])
def test_absorbance_values(T, A):
    out = to_absorbance(spectra_table([[T, T]]))
    assert out.mode == "absorbance"
    assert np.allclose(out.values, A, atol=1e-15)


def test_absorbance_rejects_zero():
    with pytest.raises(PreprocessError, match=r"sample 's0' \(row 2\), channel 2"):
        to_absorbance(spectra_table([[0.5, 0.0]]))


def test_absorbance_needs_transmittance():
    t = spectra_table([[0.5]]).with_values([[0.5]], mode="absorbance")
    with pytest.raises(PreprocessError):
        to_absorbance(t)


def test_zero_traits_removed():
    tr = io.TraitTable(["a", "b", "c"], {"RCT": np.array([0.0, 5.0, np.nan])})
    trace = StageTrace()
    out = remove_zero_traits(tr, trace)
    assert np.isnan(out.column("RCT")).tolist() == [True, False, True]
    rec = trace.records[0]
    assert (rec.stage, rec.n_in, rec.n_used, rec.n_dropped) == ("zero_removal:RCT", 2, 1, 1)


def test_averaging_two_spectra():
    sp = spectra_table([[1.0, 2.0], [3.0, 4.0], [5.0, 5.0]], ["a1", "a1", "a2"])
    tr = io.TraitTable(["a1", "a2", "a3"], {"pH": np.array([6.5, 6.7, 6.9])})
    D = np.array([[1.0, np.nan], [3.0, 2.0], [0.0, 0.0]])
    trace = StageTrace()
    s, t, d = clean_and_average(sp, tr, D, trace)
    assert s.animal_id == ["a1", "a2"]
    assert np.array_equal(s.values[0], [2.0, 3.0])
    assert np.array_equal(d[0], [2.0, 2.0])  # NaN ignored per column
    assert list(t.column("pH")) == [6.5, 6.7]
    avg = [r for r in trace.records if r.stage == "averaging"][0]
    assert (avg.n_in, avg.n_used) == (3, 3)


def test_averaging_drops_unmatched_animals():
    sp = spectra_table([[1.0], [2.0]], ["a1", "orphan"])
    tr = io.TraitTable(["a1"], {"pH": np.array([6.5])})
    trace = StageTrace()
    s, _, _ = clean_and_average(sp, tr, trace=trace)
    assert s.animal_id == ["a1"]
    assert trace.records[-1].n_dropped == 1


def test_duplicate_trait_rows_are_averaged():
    sp = spectra_table([[1.0]], ["a1"])
    tr = io.TraitTable(["a1", "a1"], {"pH": np.array([6.0, 7.0])})
    _, t, _ = clean_and_average(sp, tr)
    assert list(t.column("pH")) == [6.5]


def test_standardize_two_values():
    out = standardize(spectra_table([[1.0], [3.0]]))
    assert np.allclose(out.values[:, 0], [-1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-15)


def test_standardize_constant_and_idempotent():
    X = np.column_stack([np.arange(6.0), np.full(6, 4.0), np.random.default_rng(0).normal(size=6)])
    once = standardize(spectra_table(X))
    assert once.flags["constant_channels"] == [1]
    assert np.array_equal(once.values[:, 1], np.zeros(6))
    twice = standardize(once)
    assert np.max(np.abs(twice.values - once.values)) < 1e-12
    with pytest.raises(PreprocessError):
        standardize(spectra_table([[1.0, 2.0]]))


def test_outlier_single_pass():
    tr = io.TraitTable(list("abcde"), {"RCT": np.array([0.0, 0.0, 0.0, 0.0, 100.0])})
    out = filter_trait_outliers(tr)
    # |100 - 20| = 80 is under 3 * 44.7
    assert np.isfinite(out.column("RCT")).all()
    x = np.r_[np.zeros(20), 100.0]
    out = filter_trait_outliers(io.TraitTable([str(i) for i in range(21)], {"RCT": x}))
    assert np.isnan(out.column("RCT")[-1]) and np.isfinite(out.column("RCT")[:-1]).all()


def test_outlier_all_equal():
    tr = io.TraitTable(list("abc"), {"pH": np.full(3, 6.6)})
    assert np.isfinite(filter_trait_outliers(tr).column("pH")).all()


def test_median_split():
    assert list(categorize([1, 2, 3, 4], "RCT")) == ["QLow", "QLow", "QHigh", "QHigh"]
    # a value on the median goes to the lower category
    assert list(categorize([1, 2, 3], "pH")) == ["QLow", "QLow", "QHigh"]


def test_quartiles():
    labels = categorize(np.arange(1, 9), "TPC")
    assert list(labels) == ["Q1", "Q1", "Q2", "Q2", "Q3", "Q3", "Q4", "Q4"]
    assert set(QUARTILE_TRAITS) | set(MEDIAN_TRAITS) >= {"TPC", "RCT", "k-CN"}


def test_categorize_missing_and_degenerate():
    assert list(categorize([1.0, np.nan, 3.0], "RCT")) == ["QLow", "", "QHigh"]
    with pytest.raises(PreprocessError):
        categorize([2.0, 2.0, 2.0], "RCT")
    with pytest.raises(PreprocessError):
        categorize([np.nan], "RCT")


def test_truncate():
    assert truncate_pow2(np.zeros((2, 1060))).shape == (2, 1024)
    with pytest.raises(PreprocessError):
        truncate_pow2(np.zeros(1000))


def test_stage_record_conservation():
    trace = StageTrace()
    rec = trace.add("x", "samples", 5, 3)
    assert rec.n_dropped == 2
    assert trace.to_list() == [{"stage": "x", "unit": "samples", "n_in": 5, "n_used": 3, "n_dropped": 2}]
