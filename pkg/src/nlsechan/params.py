"""Physical fiber-link parameters and their dimensionless reduction.

Unit system at the interface is (s, km, W).  Everything downstream of
:func:`derive_dimensionless` operates purely on dimensionless numbers, so
unit handling is confined to this module.

Bandwidth convention
--------------------
The bandwidth ``W`` is stored as a plain scalar in 1/s with the convention
that 100 GHz maps to ``1e11``.  This is *not* an angular frequency: the
dimensionless dispersion ``beta_tilde = beta * L * W**2`` of a standard
20 ps^2/km, 1000 km, 100 GHz link only comes out near 200 under this
reading.  Config files therefore take ``bandwidth_ghz`` and multiply by
1e9.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


class ParameterError(ValueError):
    """A physical parameter is outside its admissible domain."""


@dataclass(frozen=True)
class PhysicalChannel:
    """Dimensionful single-polarization lossless fiber link.

    Attributes
    ----------
    beta : float
        Dispersion coefficient [s^2/km].  May be zero (nondispersive) or
        negative.
    gamma : float
        Kerr coefficient [1/(W km)].  May be zero (linear channel).
    length : float
        Propagation distance L [km], > 0.
    bandwidth : float
        Signal band W [1/s] under the scalar convention (100 GHz -> 1e11).
    noise_psd : float
        Noise power Q per unit length and unit frequency [W s/km], > 0.
    signal_psd : float
        Signal spectral power density P [W s], >= 0.
    """

    beta: float
    gamma: float
    length: float
    bandwidth: float
    noise_psd: float
    signal_psd: float = 0.0

    def __post_init__(self):
        if not (self.length > 0.0):
            raise ParameterError(f"length must be > 0, got {self.length}")
        if not (self.bandwidth > 0.0):
            raise ParameterError(f"bandwidth must be > 0, got {self.bandwidth}")
        if not (self.noise_psd > 0.0):
            raise ParameterError(f"noise_psd must be > 0, got {self.noise_psd}")
        if self.signal_psd < 0.0:
            raise ParameterError(f"signal_psd must be >= 0, got {self.signal_psd}")
        for name in ("beta", "gamma", "length", "bandwidth", "noise_psd", "signal_psd"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")

    @property
    def noise_power(self) -> float:
        """Accumulated in-band noise power Q L W / 2pi [W]."""
        return self.noise_psd * self.length * self.bandwidth / TWO_PI

    @classmethod
    def from_noise_power(cls, beta, gamma, length, bandwidth, noise_power,
                         signal_psd=0.0) -> "PhysicalChannel":
        """Build a channel from the in-band noise power instead of Q.

        ``noise_power`` is Q L W / 2pi in watts; Q is recovered as
        ``2 pi noise_power / (L W)``.
        """
        if not (length > 0.0 and bandwidth > 0.0):
            raise ParameterError("length and bandwidth must be > 0")
        if not (noise_power > 0.0):
            raise ParameterError(f"noise_power must be > 0, got {noise_power}")
        q = TWO_PI * noise_power / (length * bandwidth)
        return cls(beta=beta, gamma=gamma, length=length, bandwidth=bandwidth,
                   noise_psd=q, signal_psd=signal_psd)

    @classmethod
    def from_dimensionless(cls, beta_tilde, gamma_tilde, snr, *, length,
                           bandwidth, noise_power) -> "PhysicalChannel":
        """Invert the dimensionless reduction given a reference (L, W, P_noise)."""
        if not (snr > 0.0):
            raise ParameterError(f"snr must be > 0, got {snr}")
        if gamma_tilde < 0.0:
            raise ParameterError(f"gamma_tilde must be >= 0, got {gamma_tilde}")
        beta = beta_tilde / (length * bandwidth**2)
        p_ave = snr * noise_power
        gamma = gamma_tilde / (length * p_ave)
        q = TWO_PI * noise_power / (length * bandwidth)
        p = snr * q * length
        return cls(beta=beta, gamma=gamma, length=length, bandwidth=bandwidth,
                   noise_psd=q, signal_psd=p)

    def with_snr(self, snr) -> "PhysicalChannel":
        """Copy of the link with signal_psd set so that P/(QL) = snr."""
        if not (snr > 0.0):
            raise ParameterError(f"snr must be > 0, got {snr}")
        return PhysicalChannel(self.beta, self.gamma, self.length, self.bandwidth,
                               self.noise_psd, snr * self.noise_psd * self.length)


@dataclass(frozen=True)
class DimensionlessChannel:
    """The numbers that drive every analytic formula.

    Attributes
    ----------
    beta_tilde : float
        beta L W^2, accumulated dispersion over the band.
    gamma_tilde : float
        gamma L P_ave, Kerr strength.
    snr : float
        P / (Q L).
    p_ave : float
        Average signal power P W / 2pi [W].
    p_noise : float
        Accumulated noise power Q L W / 2pi [W].
    """

    beta_tilde: float
    gamma_tilde: float
    snr: float
    p_ave: float
    p_noise: float

    def __post_init__(self):
        if not (self.snr > 0.0):
            raise ParameterError(f"snr must be > 0, got {self.snr}")
        if not (self.p_noise > 0.0):
            raise ParameterError(f"p_noise must be > 0, got {self.p_noise}")


def derive_dimensionless(phys: PhysicalChannel) -> DimensionlessChannel:
    """Reduce a physical link to (beta_tilde, gamma_tilde, snr, p_ave, p_noise).

    Defining identities::

        beta_tilde  = beta * L * W**2
        snr         = P / (Q * L)
        p_noise     = Q * L * W / 2pi
        p_ave       = P * W / 2pi  =  snr * p_noise
        gamma_tilde = gamma * L * p_ave

    Requires ``signal_psd > 0`` (otherwise snr is undefined).
    """
    if not (phys.signal_psd > 0.0):
        raise ParameterError("signal_psd must be > 0 to derive snr; "
                             "use with_snr() to set it")
    snr = phys.signal_psd / (phys.noise_psd * phys.length)
    p_noise = phys.noise_power
    p_ave = phys.signal_psd * phys.bandwidth / TWO_PI
    return DimensionlessChannel(
        beta_tilde=phys.beta * phys.length * phys.bandwidth**2,
        gamma_tilde=phys.gamma * phys.length * p_ave,
        snr=snr,
        p_ave=p_ave,
        p_noise=p_noise,
    )


def gamma_tilde_of_snr(phys: PhysicalChannel, snr) -> float:
    """Kerr strength gamma_tilde = gamma L (snr * p_noise) at a given snr.

    Linear in snr at fixed noise floor; does not require signal_psd.
    """
    if not (snr > 0.0):
        raise ParameterError(f"snr must be > 0, got {snr}")
    return phys.gamma * phys.length * (snr * phys.noise_power)


def standard_link(snr=None) -> PhysicalChannel:
    """A typical 1000 km standard-fiber link (20 ps^2/km, 1.31/W/km, 100 GHz).

    The noise floor is set to 5.3e-7 W accumulated in-band power.  When
    ``snr`` is given, signal_psd is set accordingly.
    """
    link = PhysicalChannel.from_noise_power(
        beta=20e-24, gamma=1.31, length=1000.0, bandwidth=1e11,
        noise_power=5.3e-7)
    return link.with_snr(snr) if snr is not None else link


# ---------------------------------------------------------------------------
# Config file schema (JSON).  Physical keys carry explicit unit suffixes and
# are normalized to internal (s, km, W) units here.


class ConfigError(ValueError):
    """Config file is missing, malformed, or violates the schema."""


_CHANNEL_KEYS = {
    "beta_ps2_per_km", "gamma_per_w_km", "length_km", "bandwidth_ghz",
    "noise_psd_w_s_per_km", "noise_power_w", "signal_psd_w_s", "snr_db",
}


def _channel_from_dict(d: dict) -> PhysicalChannel:
    unknown = set(d) - _CHANNEL_KEYS
    if unknown:
        raise ConfigError(f"unknown channel keys: {sorted(unknown)}")
    for key in ("length_km", "bandwidth_ghz"):
        if key not in d:
            raise ConfigError(f"channel config requires '{key}'")
    if ("noise_power_w" in d) == ("noise_psd_w_s_per_km" in d):
        raise ConfigError("give exactly one of noise_power_w / noise_psd_w_s_per_km")
    beta = float(d.get("beta_ps2_per_km", 0.0)) * 1e-24   # ps^2 -> s^2
    gamma = float(d.get("gamma_per_w_km", 0.0))
    length = float(d["length_km"])
    bandwidth = float(d["bandwidth_ghz"]) * 1e9           # scalar convention
    try:
        if "noise_power_w" in d:
            link = PhysicalChannel.from_noise_power(
                beta, gamma, length, bandwidth, float(d["noise_power_w"]),
                signal_psd=float(d.get("signal_psd_w_s", 0.0)))
        else:
            link = PhysicalChannel(beta, gamma, length, bandwidth,
                                   float(d["noise_psd_w_s_per_km"]),
                                   float(d.get("signal_psd_w_s", 0.0)))
        if "snr_db" in d:
            link = link.with_snr(10.0 ** (float(d["snr_db"]) / 10.0))
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    return link


def load_config(path) -> dict:
    """Load a JSON config file and normalize the channel section.

    Returns a dict with keys:

    - ``channel``: a :class:`PhysicalChannel`
    - ``grid``: dict with ``m_meaning`` (default 32) and ``oversampling`` (4)
    - ``propagation``: dict with ``n_steps`` (1000) and ``scheme`` ("strang")
    - ``raw``: the parsed JSON as given (for hashing/reporting)
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict) or "channel" not in raw:
        raise ConfigError("config must be a JSON object with a 'channel' section")
    grid = dict(raw.get("grid", {}))
    grid.setdefault("m_meaning", 32)
    grid.setdefault("oversampling", 4)
    prop = dict(raw.get("propagation", {}))
    prop.setdefault("n_steps", 1000)
    prop.setdefault("scheme", "strang")
    if prop["scheme"] not in ("strang", "euler"):
        raise ConfigError(f"unknown scheme {prop['scheme']!r}")
    return {
        "channel": _channel_from_dict(raw["channel"]),
        "grid": grid,
        "propagation": prop,
        "raw": raw,
    }
