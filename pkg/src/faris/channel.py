"""Correlated surface geometry and channel synthesis.

Conventions used throughout:
  - ports are indexed 0-based, row-major: index i sits at grid cell
    (row, col) = (i // m_x, i mod m_x);
  - the BS feed link is a spherical-wave unit-modulus steering vector from a
    boresight point at distance l_f from the surface center;
  - the surface->user LoS component is a far-field planar steering vector
    (broadside by default);
  - all dB/dBm quantities are converted to linear values exactly once, when
    `SystemParams` is constructed. Everything downstream is linear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError


def dbm_to_watts(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def db_to_amplitude(x_db: float) -> float:
    """Power-gain dB -> linear amplitude ratio (20 dB per decade)."""
    return 10.0 ** (x_db / 20.0)


@dataclass(frozen=True)
class SurfaceGeometry:
    """Square (or degenerate rectangular) grid of candidate ports.

    m_x is the number of columns; m_y defaults to m_x, giving the standard
    square surface with M = m_x**2 elements. m_y=1 yields a linear strip,
    used by oracle-scale tests where the total port count is not a perfect
    square. The physical aperture along x is w_x * wavelength, so the
    inter-element spacing is d = w_x * wavelength / m_x.
    """

    m_x: int
    w_x: float
    wavelength: float
    m_y: int | None = None

    def __post_init__(self) -> None:
        if self.m_x < 2:
            raise ValidationError(f"m_x must be >= 2, got {self.m_x}")
        m_y = self.m_x if self.m_y is None else self.m_y
        if m_y < 1:
            raise ValidationError(f"m_y must be >= 1, got {m_y}")
        object.__setattr__(self, "m_y", m_y)
        if not self.w_x > 0:
            raise ValidationError(f"w_x must be > 0, got {self.w_x}")
        if not self.wavelength > 0:
            raise ValidationError(f"wavelength must be > 0, got {self.wavelength}")

    @property
    def m(self) -> int:
        return self.m_x * self.m_y  # type: ignore[operator]

    @property
    def spacing(self) -> float:
        return self.w_x * self.wavelength / self.m_x


@dataclass(frozen=True)
class SystemParams:
    """Link-budget and hardware parameters (configured in dBm/dB, stored
    alongside their linear equivalents)."""

    tx_power_dbm: float = 15.0
    p_max_dbm: float = 25.0
    g_max_db: float = 40.0
    noise_ris_dbm: float = -90.0
    noise_mu_dbm: float = -90.0
    rician_k: float = 1.0
    l_f_m: float = 1.5
    l_u_m: float = 15.0
    pl_exp_f: float = 2.0
    pl_exp_u: float = 2.2
    mu_azimuth_rad: float = 0.0
    mu_elevation_rad: float = 0.0

    # linear equivalents, filled in __post_init__
    tx_power_w: float = field(init=False)
    p_max_w: float = field(init=False)
    g_max: float = field(init=False)
    sigma_r_sq: float = field(init=False)
    sigma_0_sq: float = field(init=False)

    def __post_init__(self) -> None:
        if self.rician_k < 0:
            raise ValidationError(f"rician_k must be >= 0, got {self.rician_k}")
        object.__setattr__(self, "tx_power_w", dbm_to_watts(self.tx_power_dbm))
        object.__setattr__(self, "p_max_w", dbm_to_watts(self.p_max_dbm)
                           if math.isfinite(self.p_max_dbm) else math.inf)
        object.__setattr__(self, "g_max", db_to_amplitude(self.g_max_db))
        object.__setattr__(self, "sigma_r_sq", dbm_to_watts(self.noise_ris_dbm))
        object.__setattr__(self, "sigma_0_sq", dbm_to_watts(self.noise_mu_dbm))
        for name in ("tx_power_w", "p_max_w", "g_max", "sigma_r_sq", "sigma_0_sq"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must convert to a positive value")


def check_los_condition(geom: SurfaceGeometry, params: SystemParams) -> None:
    """The feed link is only treated as LoS while l_f < wavelength * M."""
    d_rb = geom.wavelength * geom.m
    if not params.l_f_m < d_rb:
        raise ValidationError(
            f"l_f_m={params.l_f_m} must be smaller than wavelength*M={d_rb:.4g} "
            "for the LoS feed model to hold"
        )


def element_positions(geom: SurfaceGeometry) -> np.ndarray:
    """(M, 2) array of (x, y) positions in meters, centered on the surface."""
    m_x, m_y, d = geom.m_x, geom.m_y, geom.spacing
    idx = np.arange(geom.m)
    rows, cols = idx // m_x, idx % m_x
    x = (cols - (m_x - 1) / 2.0) * d
    y = (rows - (m_y - 1) / 2.0) * d
    return np.stack([x, y], axis=1)


def element_distance(i: int, j: int, geom: SurfaceGeometry) -> float:
    """Physical distance between ports i and j on the grid."""
    m = geom.m
    for k in (i, j):
        if not 0 <= k < m:
            raise ValidationError(f"port index {k} out of range [0, {m})")
    dr = i // geom.m_x - j // geom.m_x
    dc = i % geom.m_x - j % geom.m_x
    return geom.spacing * math.sqrt(dr * dr + dc * dc)


@dataclass(frozen=True)
class CorrelationModel:
    """Spatial correlation matrix and its PSD square root."""

    j: np.ndarray
    j_sqrt: np.ndarray


# eigenvalues below EIG_CLIP_REL * lambda_max are treated as exact zeros when
# forming the PSD square root
EIG_CLIP_REL = 1e-12


def build_correlation(geom: SurfaceGeometry) -> CorrelationModel:
    """Sinc (isotropic-scattering) correlation J_ij = sin(x)/x, x = 2 pi d_ij / lambda.

    The square root is formed from a symmetric eigendecomposition with
    eigenvalues below EIG_CLIP_REL * lambda_max clipped to zero; the sinc
    kernel is PSD analytically but not always numerically.
    """
    pos = element_positions(geom)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    x = 2.0 * np.pi * dist / geom.wavelength
    j = np.ones_like(x)
    nz = x != 0.0
    j[nz] = np.sin(x[nz]) / x[nz]
    np.fill_diagonal(j, 1.0)

    try:
        eigval, eigvec = np.linalg.eigh(j)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigendecomposition of the {geom.m}x{geom.m} correlation matrix failed: "
            f"{exc}; ||J||_F={np.linalg.norm(j):.3e}"
        ) from exc
    lam_max = float(eigval.max())
    clipped = np.where(eigval < EIG_CLIP_REL * lam_max, 0.0, eigval)
    j_sqrt = (eigvec * np.sqrt(clipped)) @ eigvec.T
    j_sqrt = 0.5 * (j_sqrt + j_sqrt.T)
    return CorrelationModel(j=j, j_sqrt=j_sqrt)


def los_bs_faris(geom: SurfaceGeometry, l_f: float) -> np.ndarray:
    """Spherical-wave unit-modulus steering vector from the boresight BS point."""
    if not l_f > 0:
        raise ValidationError(f"l_f must be > 0, got {l_f}")
    pos = element_positions(geom)
    r = np.sqrt(l_f ** 2 + (pos ** 2).sum(axis=1))
    return np.exp(-2j * np.pi * r / geom.wavelength)


def los_mu_steering(geom: SurfaceGeometry, azimuth_rad: float = 0.0,
                    elevation_rad: float = 0.0) -> np.ndarray:
    """Far-field planar steering vector toward the user (broadside default)."""
    pos = element_positions(geom)
    path = (pos[:, 0] * math.sin(azimuth_rad) * math.cos(elevation_rad)
            + pos[:, 1] * math.sin(elevation_rad))
    return np.exp(-2j * np.pi * path / geom.wavelength)


def sample_rician(h_u_los: np.ndarray, rician_k: float, count: int,
                  seed) -> np.ndarray:
    """Draw `count` Rician realizations around the LoS component.

    Each sample is sqrt(K/(K+1)) * h_los + sqrt(1/(K+1)) * n with n having
    i.i.d. unit-variance circularly symmetric complex Gaussian entries.
    Returns an (S, M) array; identical seeds reproduce identical bytes.
    """
    if rician_k < 0:
        raise ValidationError(f"rician_k must be >= 0, got {rician_k}")
    if count < 1:
        raise ValidationError(f"sample count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    m = h_u_los.shape[0]
    nlos = (rng.standard_normal((count, m)) + 1j * rng.standard_normal((count, m)))
    nlos *= math.sqrt(0.5)
    w_los = math.sqrt(rician_k / (rician_k + 1.0))
    w_nlos = math.sqrt(1.0 / (rician_k + 1.0))
    return w_los * h_u_los[None, :] + w_nlos * nlos


def path_loss(distance_m: float, exponent: float, wavelength: float) -> float:
    """Friis-referenced power-law gain (lambda/4pi)^2 * d^-exponent, d >= 1 m."""
    if distance_m < 1.0:
        raise ValidationError(
            f"path_loss is only valid for distance >= 1 m, got {distance_m}"
        )
    return (wavelength / (4.0 * np.pi)) ** 2 * distance_m ** (-exponent)


@dataclass(frozen=True)
class ChannelSet:
    """Frozen channel realizations for one optimization run."""

    h_f_los: np.ndarray          # (M,) BS -> surface steering
    h_u_los: np.ndarray          # (M,) surface -> user LoS part
    samples: np.ndarray          # (S, M) Rician realizations of h_u
    wavelength: float

    @property
    def s(self) -> int:
        return self.samples.shape[0]


def build_channels(geom: SurfaceGeometry, params: SystemParams, count: int,
                   seed) -> ChannelSet:
    """Synthesize the deterministic steering vectors and S fading samples."""
    check_los_condition(geom, params)
    h_f = los_bs_faris(geom, params.l_f_m)
    h_u = los_mu_steering(geom, params.mu_azimuth_rad, params.mu_elevation_rad)
    samples = sample_rician(h_u, params.rician_k, count, seed)
    return ChannelSet(h_f_los=h_f, h_u_los=h_u, samples=samples,
                      wavelength=geom.wavelength)
