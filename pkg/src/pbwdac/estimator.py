"""scikit-learn style wrappers.

``PhotonicDAC`` is a transformer mapping digital codes to detected optical
power; ``LinearityAnalyzer`` is a regressor that fits the reference line
to (code, output) pairs and exposes DNL/INL as fitted attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .circuit import (MAX_ENUMERATED_BITS, DacCircuit, OpticalField, fields_for_codes,
                      transfer_curve, TransferCurve)
from .metrics import AnalysisDomain, LsbDefinition, _fit_xy, static_report


def _check_codes(X, n_bits: int) -> np.ndarray:
    X = check_array(X, ensure_2d=False, dtype=None)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single column of codes, got {X.shape[1]} columns")
        X = X[:, 0]
    if not np.all(np.equal(np.mod(X, 1), 0)):
        raise ValueError("codes must be integers")
    codes = X.astype(np.int64)
    if codes.min() < 0 or codes.max() >= (1 << n_bits):
        raise ValueError(f"codes must lie in [0, {(1 << n_bits) - 1}]")
    return codes


class PhotonicDAC(TransformerMixin, BaseEstimator):
    """Coherent binary-weighted photonic DAC as a code -> power transformer.

    Parameters
    ----------
    n_bits : int
        Resolution; bit ``n_bits`` is the MSB.
    split_ratio : float
        Power fraction tapped by each unbalanced coupler.
    extinction_ratio_db : float
        Modulator on/off contrast; ``np.inf`` for a perfect absorber.
    residual_phase_rad : float or sequence
        Uncompensated phase per branch (scalar applies to all).
    input_power_w, wavelength_m : float
        Carrier launched into the chip.

    Attributes
    ----------
    circuit_ : DacCircuit
    transfer_curve_ : TransferCurve or None
        All ``2^n_bits`` codes, when that is enumerable.
    """

    def __init__(self, n_bits=4, split_ratio=0.75, extinction_ratio_db=4.6,
                 insertion_loss_db=0.0, coupler_excess_loss_db=0.0,
                 combiner_excess_loss_db=0.0, io_coupling_loss_db=0.0,
                 weight_convention="POWER_SPLIT", residual_phase_rad=0.0,
                 input_power_w=1e-3, wavelength_m=1550e-9):
        self.n_bits = n_bits
        self.split_ratio = split_ratio
        self.extinction_ratio_db = extinction_ratio_db
        self.insertion_loss_db = insertion_loss_db
        self.coupler_excess_loss_db = coupler_excess_loss_db
        self.combiner_excess_loss_db = combiner_excess_loss_db
        self.io_coupling_loss_db = io_coupling_loss_db
        self.weight_convention = weight_convention
        self.residual_phase_rad = residual_phase_rad
        self.input_power_w = input_power_w
        self.wavelength_m = wavelength_m

    def fit(self, X=None, y=None):
        self.circuit_ = DacCircuit.uniform(
            self.n_bits, split_ratio_r=self.split_ratio,
            extinction_ratio_db=self.extinction_ratio_db,
            insertion_loss_db=self.insertion_loss_db,
            coupler_excess_loss_db=self.coupler_excess_loss_db,
            residual_phase_rad=self.residual_phase_rad,
            combiner_excess_loss_db=self.combiner_excess_loss_db,
            io_coupling_loss_db=self.io_coupling_loss_db,
            weight_convention=self.weight_convention)
        self.input_ = OpticalField.from_power(self.input_power_w, self.wavelength_m)
        self.transfer_curve_ = (transfer_curve(self.circuit_, self.input_)
                                if self.n_bits <= MAX_ENUMERATED_BITS else None)
        self.n_features_in_ = 1
        return self

    def output_fields(self, X) -> np.ndarray:
        check_is_fitted(self, "circuit_")
        return fields_for_codes(self.circuit_, _check_codes(X, self.n_bits), self.input_)

    def transform(self, X):
        """Output optical power in watts, shape ``(n_samples, 1)``."""
        return (np.abs(self.output_fields(X)) ** 2)[:, None]


class LinearityAnalyzer(RegressorMixin, BaseEstimator):
    """Reference-line regression of converter output against code.

    ``predict`` returns the reference line.  When the codes cover the whole
    range densely, ``dnl_``, ``inl_`` and ``report_`` are populated.
    """

    def __init__(self, lsb_definition="BEST_FIT_SLOPE", domain="POWER"):
        self.lsb_definition = lsb_definition
        self.domain = domain

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_2d=False, y_numeric=True)
        codes = np.asarray(X).reshape(len(y), -1)[:, 0].astype(np.int64)
        order = np.argsort(codes, kind="stable")
        codes, y = codes[order], np.asarray(y, dtype=float)[order]
        domain = AnalysisDomain(self.domain)
        values = np.sqrt(np.clip(y, 0, None)) if domain is AnalysisDomain.FIELD else y
        self.fit_ = _fit_xy(codes.astype(float), values)
        self.coef_ = np.array([self.fit_.slope])
        self.intercept_ = self.fit_.intercept
        n_bits = int(np.ceil(np.log2(codes.max() + 1))) if codes.max() > 0 else 1
        curve = TransferCurve(n_bits, codes, y)
        if curve.is_dense:
            self.report_ = static_report(curve, LsbDefinition(self.lsb_definition), domain)
            self.dnl_, self.inl_ = self.report_.dnl, self.report_.inl
        else:
            self.report_ = self.dnl_ = self.inl_ = None
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        X = check_array(X, ensure_2d=False)
        return self.fit_(np.asarray(X).reshape(X.shape[0], -1)[:, 0])
