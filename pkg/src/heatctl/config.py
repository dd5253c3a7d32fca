"""Flat ``key=value`` experiment configuration."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .driver import VARIANTS, RunConfig
from .fem import Grid
from .forward import ForwardConfig
from .nonlinearity import ConfigError, Nonlinearity, from_table, linear, paper_g, zero
from .weights import WeightParams


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _interval(text: str) -> tuple[float, float]:
    parts = [p for p in text.replace("(", "").replace(")", "").split(",") if p.strip()]
    if len(parts) != 2:
        raise ValueError(f"expected 'a1,a2', got {text!r}")
    a1, a2 = float(parts[0]), float(parts[1])
    if not 0 < a1 < a2 < 1:
        raise ValueError("need 0 < a1 < a2 < 1")
    return a1, a2


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {t!r}")
        return t
    return parse


def _positive(kind):
    def parse(text: str):
        v = kind(text)
        if not v > 0:
            raise ValueError(f"must be positive, got {text!r}")
        return v
    return parse


def _str(text: str) -> str:
    return text.strip()


# key -> (parser, default, help)
KEYS: dict[str, tuple[Callable[[str], Any], Any, str]] = {
    "geometry.omega": (_interval, (0.1, 0.3), "control interval a1,a2"),
    "geometry.T": (_positive(float), 0.5, "time horizon"),
    "geometry.nu": (_positive(float), 0.1, "diffusion coefficient"),
    "u0.beta": (float, None, "amplitude of u0(x) = beta*sin(pi x); required by run/newton/picard"),
    "g.kind": (_choice("paper", "linear", "zero", "custom-table"), "paper", "nonlinearity family"),
    "g.a": (_positive(float), 0.1, "junction point of the benchmark g"),
    "g.alpha": (_positive(float), 0.95, "exponent of the benchmark g"),
    "g.smooth": (_bool, False, "use the C2 inner branch c1 s^2 + c2 s^4"),
    "g.c": (float, 1.0, "slope of the linear g"),
    "g.table": (_str, "", "two-column file of (s, g(s)) pairs for custom-table"),
    "weights.s_w": (_positive(float), 3e-4, "Carleman exponent s"),
    "weights.lam_w": (_positive(float), 1.0, "exponent lambda inside beta"),
    "weights.m_w": (float, 1.1, "amplification m (> 1)"),
    "mesh.nx": (int, 64, "space cells"),
    "mesh.nt": (int, 64, "time cells"),
    "mesh.quad_order": (int, 5, "Gauss points per direction and cell"),
    "mesh.aligned": (_bool, False, "integrate the omega indicator exactly on aligned cells"),
    "mesh.split_kink": (_bool, True, "allow a one-sided time derivative at t = T/4"),
    "solver.kind": (_choice("direct", "cg"), "direct", "linear solver"),
    "solver.cg_tol": (_positive(float), 1e-10, "CG relative residual"),
    "solver.cg_maxit": (int, 20000, "CG iteration cap"),
    "riesz.refine": (int, 4, "Riesz mesh refinement factor"),
    "forward.nx": (int, 513, "forward solver P1 nodes"),
    "forward.nt": (int, 2048, "forward solver time steps"),
    "forward.scheme": (_choice("crank_nicolson", "implicit_euler"), "crank_nicolson", "time scheme"),
    "forward.enabled": (_bool, True, "verify the final control with the forward solver"),
    "run.epsilon": (_positive(float), 1e-6, "stop when E < epsilon"),
    "run.step_max": (float, 1.0, "line-search upper bound"),
    "run.variant": (_choice(*VARIANTS), "ls", "ls, newton or picard"),
    "run.max_iters": (int, 50, "iteration cap"),
    "run.divergence_cap": (_positive(float), 20.0, "diverged when sqrt(2E) > cap * initial"),
    "run.picard_tol": (_positive(float), 1e-3, "Picard stop on rel_dy"),
    "output.dir": (_str, "heatctl_out", "output directory"),
}


@dataclass
class ExperimentConfig:
    values: dict[str, Any] = field(default_factory=lambda: {k: v[1] for k, v in KEYS.items()})

    def __getitem__(self, key: str):
        return self.values[key]

    def set(self, key: str, text: str, where: str = "") -> None:
        loc = f" ({where})" if where else ""
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}{loc}")
        parser = KEYS[key][0]
        try:
            self.values[key] = parser(text)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid value for {key!r}{loc}: {exc}") from None

    # builders ---------------------------------------------------------------
    def weight_params(self) -> WeightParams:
        try:
            return WeightParams(
                s_w=self["weights.s_w"], lam_w=self["weights.lam_w"], m_w=self["weights.m_w"],
                T=self["geometry.T"], omega=self["geometry.omega"],
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def grid(self) -> Grid:
        try:
            return Grid(self["mesh.nx"], self["mesh.nt"], self["geometry.T"],
                        split_kink=self["mesh.split_kink"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def nonlinearity(self) -> Nonlinearity:
        kind = self["g.kind"]
        if kind == "paper":
            return paper_g(self["g.a"], self["g.alpha"], self["g.smooth"])
        if kind == "linear":
            return linear(self["g.c"])
        if kind == "zero":
            return zero()
        path = self["g.table"]
        if not path:
            raise ConfigError("g.kind=custom-table needs g.table")
        try:
            data = np.loadtxt(path, ndmin=2)
        except OSError as exc:
            raise ConfigError(f"cannot read g.table: {exc}") from None
        return from_table(data[:, 0], data[:, 1])

    def run_config(self, variant: str | None = None) -> RunConfig:
        try:
            return RunConfig(
                epsilon=self["run.epsilon"], step_max=self["run.step_max"],
                max_iters=self["run.max_iters"], variant=variant or self["run.variant"],
                divergence_cap=self["run.divergence_cap"], picard_tol=self["run.picard_tol"],
                solver_kind=self["solver.kind"], cg_tol=self["solver.cg_tol"],
                cg_maxit=self["solver.cg_maxit"],
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def forward_config(self) -> ForwardConfig:
        try:
            return ForwardConfig(nx_f=self["forward.nx"], nt_f=self["forward.nt"],
                                 scheme=self["forward.scheme"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def u0(self) -> Callable[[np.ndarray], np.ndarray]:
        beta = self["u0.beta"]
        if beta is None:
            raise ConfigError("u0.beta is required")
        return lambda x: beta * np.sin(np.pi * np.asarray(x, dtype=float))

    def validate(self) -> None:
        """Build every component once so that bad combinations fail early."""
        self.weight_params()
        self.grid()
        self.nonlinearity()
        self.run_config()
        self.forward_config()
        if self["mesh.quad_order"] < 3:
            raise ConfigError("mesh.quad_order must be >= 3")
        if self["riesz.refine"] < 1:
            raise ConfigError("riesz.refine must be >= 1")


def parse_config(path: str | Path | None = None, overrides: list[str] | None = None) -> ExperimentConfig:
    """Read a flat ``key=value`` file (``#`` comments) and apply ``key=value`` overrides."""
    cfg = ExperimentConfig()
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {p}: {exc.strerror}") from None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{p}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            cfg.set(key, value, where=f"{p}:{lineno}")
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        cfg.set(key, value, where="--set")
    return cfg


def describe_keys() -> str:
    width = max(len(k) for k in KEYS)
    return "\n".join(f"  {k:<{width}}  {h} (default: {d})" for k, (_, d, h) in KEYS.items())
