"""Run configuration: all blocks needed by the command-line tools.

Example::

    output_dir = out          # optional, unnamed leading section

    [source]
    T0 = 6.0                  # K
    cluster_size = 3
    speed_ratio = 50

    [geometry]                # m; beta in degrees
    d = 1e-7
    s0 = 6e-8
    t = 1.2e-7
    beta_deg = 9.0

    [surface]
    C3 = 4.0e-50              # J m^3
    l_min = 1e-10             # m
    vdw = true                # false: pure geometric aperture

    [potential]
    sample = he-he-sample     # or: form = ... plus its parameters

    [excitation]
    delta_E_mK = 97.9
    eta = 0.05
    w = 2e-9
    c_g = 0.5

    [numerics]
    n_points = 16384

Every block and key is optional and falls back to the documented default.
The slit width s0 and thickness t defaults are not measured values.
Unknown sections or keys are rejected with the offending key named.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from .beam import SourceModel
from .config import parse_blocks, reject_unknown, take_float, take_int, take_str
from .diffraction import ExcitationModel
from .errors import ParseError
from .grating import GratingGeometry
from .potentials import SurfaceInteraction, potential_from_block, sample_potential
from .units import AMU, MK, M_HE4

# trimer-scale estimate of the molecule-wall dispersion coefficient, J m^3
DEFAULT_C3 = 0.25e-3 * 1.602176634e-19 * 1e-27


@dataclass
class Numerics:
    n_points: int = 16384  # slit samples
    phi_max: float = 20 * math.pi  # opacity threshold, rad
    n_speeds: int = 16  # speed quadrature for beam averaging
    sigma_res: float = 5e-6  # angular resolution, rad
    bin_width: float = 1e-6  # smeared-spectrum bins, rad
    dimer_window_lo_mK: float = -100.0
    dimer_window_hi_mK: float = -0.5
    check_refinement: bool = True
    p_nodes: int = 600
    p_scale: float = 0.1  # 1/nm
    p_max: float = 100.0  # 1/nm
    n_q: int = 60
    q_bar: float = 1.0  # 1/nm
    q_max: float = 62.5  # 1/nm
    n_theta: int = 48
    trimer_window_lo_mK: float = -1000.0
    trimer_window_hi_mK: float = -1e-3
    efimov_n_q: int = 100
    efimov_q_bar: float = 1e-3  # 1/nm
    efimov_q_max: float = 30.0  # 1/nm
    efimov_window_lo_mK: float = -1e4
    efimov_window_hi_mK: float = -1e-9
    threads: int = 1


@dataclass
class RunConfig:
    source: SourceModel = field(default_factory=lambda: SourceModel(6.0))
    geometry: GratingGeometry = field(default_factory=GratingGeometry)
    surface: SurfaceInteraction = field(default_factory=lambda: SurfaceInteraction(DEFAULT_C3, 1e-10))
    include_vdw: bool = True
    potential: object = field(default_factory=sample_potential)
    delta_E: float = 97.9 * MK  # J
    excitation: ExcitationModel = field(default_factory=ExcitationModel)
    numerics: Numerics = field(default_factory=Numerics)
    output_dir: str | None = None

    @property
    def atom_mass(self):
        return self.source.carrier_mass


_SECTIONS = ("source", "geometry", "surface", "potential", "excitation", "numerics")


def _take_bool(block, key, default):
    if key not in block:
        return default
    val = block[key].value.lower()
    if val in ("true", "yes", "1"):
        return True
    if val in ("false", "no", "0"):
        return False
    raise ParseError(f"not a boolean: {block[key].value!r}", line=block[key].line, key=key)


def _build(cls, block, section, **kwargs):
    try:
        return cls(**kwargs)
    except ValueError as exc:
        line = min((e.line for e in block.values()), default=None)
        raise ParseError(f"[{section}] {exc}", line=line) from None


def load_run_config(text: str) -> RunConfig:
    blocks = parse_blocks(text)
    for name, block in blocks.items():
        if name is not None and name not in _SECTIONS:
            first = min((e.line for e in block.values()), default=None)
            raise ParseError(f"unknown section [{name}]", line=first, key=name)
    cfg = RunConfig()
    root = blocks[None]
    reject_unknown(root, ["output_dir"])
    if "output_dir" in root:
        cfg.output_dir = take_str(root, "output_dir")

    b = blocks.get("source", {})
    reject_unknown(b, ["T0", "carrier_mass_amu", "cluster_size", "speed_ratio"], "source")
    cfg.source = _build(SourceModel, b, "source",
                        T0=take_float(b, "T0", default=6.0),
                        carrier_mass=take_float(b, "carrier_mass_amu", default=M_HE4 / AMU) * AMU,
                        cluster_size=take_int(b, "cluster_size", default=3),
                        speed_ratio=take_float(b, "speed_ratio", default=50.0))

    b = blocks.get("geometry", {})
    reject_unknown(b, ["d", "s0", "t", "beta_deg"], "geometry")
    g = GratingGeometry()
    cfg.geometry = _build(GratingGeometry, b, "geometry",
                          d=take_float(b, "d", default=g.d), s0=take_float(b, "s0", default=g.s0),
                          t=take_float(b, "t", default=g.t),
                          beta=math.radians(take_float(b, "beta_deg", default=9.0)))

    b = blocks.get("surface", {})
    reject_unknown(b, ["C3", "l_min", "vdw"], "surface")
    cfg.surface = _build(SurfaceInteraction, b, "surface",
                         C3=take_float(b, "C3", default=DEFAULT_C3),
                         l_min=take_float(b, "l_min", default=1e-10))
    cfg.include_vdw = _take_bool(b, "vdw", True)

    b = blocks.get("potential", {})
    if "sample" in b:
        reject_unknown(b, ["sample"], "potential")
        try:
            cfg.potential = sample_potential(b["sample"].value)
        except FileNotFoundError:
            raise ParseError(f"no shipped potential named {b['sample'].value!r}",
                             line=b["sample"].line, key="sample") from None
    elif b:
        cfg.potential = potential_from_block(b, "potential")
    else:
        cfg.potential = sample_potential()

    b = blocks.get("excitation", {})
    reject_unknown(b, ["delta_E_mK", "eta", "w", "c_g"], "excitation")
    cfg.delta_E = take_float(b, "delta_E_mK", default=97.9) * MK
    if not cfg.delta_E > 0:
        raise ParseError("delta_E_mK must be positive", line=b["delta_E_mK"].line, key="delta_E_mK")
    m = ExcitationModel()
    cfg.excitation = _build(ExcitationModel, b, "excitation",
                            eta=take_float(b, "eta", default=m.eta), w=take_float(b, "w", default=m.w),
                            c_g=take_float(b, "c_g", default=m.c_g))

    b = blocks.get("numerics", {})
    names = {f.name: f for f in fields(Numerics)}
    reject_unknown(b, list(names), "numerics")
    num = Numerics()
    for key in b:
        default = getattr(num, key)
        if isinstance(default, bool):
            setattr(num, key, _take_bool(b, key, default))
        elif isinstance(default, int):
            setattr(num, key, take_int(b, key))
        else:
            setattr(num, key, take_float(b, key))
    if num.threads < 1:
        raise ParseError("threads must be >= 1", line=b["threads"].line, key="threads")
    cfg.numerics = num
    return cfg
