import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from pbwdac import LinearityAnalyzer, PhotonicDAC

CODES = np.arange(16).reshape(-1, 1)


def test_transform_matches_endpoint_law():
    dac = PhotonicDAC().fit()
    p = dac.transform(CODES)
    assert p.shape == (16, 1)
    assert p[-1, 0] / p[0, 0] == pytest.approx(10 ** 0.46, rel=1e-12)
    np.testing.assert_allclose(p[:, 0], dac.transfer_curve_.powers)


def test_ideal_quadratic():
    p = PhotonicDAC(extinction_ratio_db=np.inf).fit().transform(CODES)[:, 0]
    np.testing.assert_allclose(p, p[1] * np.arange(16) ** 2, rtol=1e-12)


def test_params_and_clone():
    dac = PhotonicDAC(n_bits=6, split_ratio=0.7)
    assert dac.get_params()["n_bits"] == 6
    c = clone(dac).set_params(n_bits=3)
    assert c.n_bits == 3 and dac.n_bits == 6
    assert not hasattr(c, "circuit_")


def test_not_fitted():
    with pytest.raises(NotFittedError):
        PhotonicDAC().transform(CODES)


@pytest.mark.parametrize("bad", [[[16]], [[-1]], [[1.5]], np.zeros((3, 2))])
def test_bad_codes(bad):
    with pytest.raises(ValueError):
        PhotonicDAC().fit().transform(bad)


def test_1d_input_and_fields():
    dac = PhotonicDAC().fit()
    f = dac.output_fields([0, 15])
    assert np.iscomplexobj(f)
    np.testing.assert_allclose(np.abs(f) ** 2, dac.transform([0, 15])[:, 0])


def test_wide_converter_not_enumerated():
    dac = PhotonicDAC(n_bits=26).fit()
    assert dac.transfer_curve_ is None
    assert dac.transform([[0], [1 << 25]]).shape == (2, 1)


def test_analyzer_ideal():
    p = PhotonicDAC(extinction_ratio_db=np.inf).fit().transform(CODES)[:, 0]
    la = LinearityAnalyzer().fit(CODES, p)
    assert la.dnl_[0] == pytest.approx(-14 / 15)
    assert np.abs(la.inl_).max() == pytest.approx(35 / 15)
    assert la.coef_[0] == pytest.approx(15 * p[1])


def test_analyzer_field_domain_scores_perfectly():
    p = PhotonicDAC(extinction_ratio_db=np.inf).fit().transform(CODES)[:, 0]
    la = LinearityAnalyzer(domain="FIELD").fit(CODES, p)
    assert la.score(CODES, np.sqrt(p)) == pytest.approx(1.0)
    np.testing.assert_allclose(la.dnl_, 0, atol=1e-9)


def test_analyzer_sparse_codes():
    la = LinearityAnalyzer().fit([[0], [5], [9]], [0.0, 5.0, 9.0])
    assert la.report_ is None and la.dnl_ is None
    np.testing.assert_allclose(la.predict([[2]]), [2.0])


def test_analyzer_unsorted_input():
    rng = np.random.default_rng(0)
    order = rng.permutation(16)
    p = PhotonicDAC().fit().transform(CODES)[:, 0]
    a = LinearityAnalyzer("ENDPOINT").fit(CODES[order], p[order])
    b = LinearityAnalyzer("ENDPOINT").fit(CODES, p)
    np.testing.assert_allclose(a.dnl_, b.dnl_)


def test_pipeline():
    pipe = make_pipeline(PhotonicDAC(extinction_ratio_db=10.0))
    out = pipe.fit(CODES).transform(CODES)
    assert out.shape == (16, 1) and np.all(np.diff(out[:, 0]) > 0)
