"""Command line entry point: ``heatctl <run|newton|picard|check|table>``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, describe_keys, parse_config

EXIT_OK, EXIT_DIVERGED, EXIT_MAXITER, EXIT_CONFIG, EXIT_INTERNAL = 0, 2, 3, 4, 5
STATUS_EXIT = {"converged": EXIT_OK, "diverged": EXIT_DIVERGED, "maxiter": EXIT_MAXITER}


def build_parser() -> argparse.ArgumentParser:
    epilog = "configuration keys (flat key=value, '#' comments):\n" + describe_keys()
    ap = argparse.ArgumentParser(
        prog="heatctl",
        description="Null controls for the semilinear heat equation by damped Newton least squares.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("command", choices=["run", "newton", "picard", "check", "table"])
    ap.add_argument("--config", metavar="PATH", help="flat key=value configuration file")
    ap.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                    help="override one configuration key (repeatable)")
    ap.add_argument("--threads", type=int, default=None,
                    help="BLAS/LAPACK threads (default: available cores)")
    ap.add_argument("--out", metavar="DIR", help="output directory (overrides HEATCTL_OUT and output.dir)")
    ap.add_argument("--records", metavar="PATH", help="records file for 'table' (default: DIR/records.jsonl)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _out_dir(args, cfg: ExperimentConfig) -> Path:
    if args.out:
        return Path(args.out)
    env = os.environ.get("HEATCTL_OUT")
    return Path(env) if env else Path(cfg["output.dir"])


def _experiment(cfg: ExperimentConfig, variant: str) -> tuple[int, str, list, dict]:
    from .driver import LeastSquaresDriver, convergence_order, one_step_bound_holds
    from .fem import QuadGrid
    from .forward import null_control_report

    cfg.validate()
    u0 = cfg.u0()
    params = cfg.weight_params()
    quad = QuadGrid(cfg.grid(), params, cfg["mesh.quad_order"], cfg["mesh.aligned"])
    g = cfg.nonlinearity()
    driver = LeastSquaresDriver(quad, g, cfg["geometry.nu"], cfg["riesz.refine"], cfg.run_config(variant))
    res = driver.run(u0)
    summary: dict = {
        "variant": variant,
        "status": res.status,
        "iterations": len(res.lambdas) if variant != "picard" else len(res.records),
        "beta": cfg["u0.beta"],
        "mesh": f"{cfg['mesh.nx']}x{cfg['mesh.nt']}",
        "weights": f"s_w={params.s_w} lam_w={params.lam_w} m_w={params.m_w}",
        "g": g.name,
        "final_sqrt2E": res.records[-1].sqrt2E,
    }
    if variant != "picard":
        E = res.E_history
        summary["descent_violations"] = sum(1 for a, b in zip(E, E[1:]) if b > a)
        summary["one_step_bound"] = one_step_bound_holds(res) if variant == "ls" else "n/a"
        if res.status == "converged":
            try:
                summary["convergence_order"] = convergence_order(res.records, n_last=3)
            except ValueError as exc:
                summary["convergence_order"] = f"n/a ({exc})"
    if cfg["forward.enabled"] and res.status == "converged":
        rep = null_control_report(res.state.mf, params, u0, g, cfg["geometry.nu"], cfg.forward_config())
        summary["terminal_ratio"] = rep.ratio
    summary["flags"] = res.flags
    return STATUS_EXIT[res.status], res.status, res.records, summary


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config, args.set)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from threadpoolctl import threadpool_limits

    limits = args.threads if args.threads is not None else os.cpu_count()
    try:
        with threadpool_limits(limits=limits):
            return _dispatch(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # anything else is an internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def _dispatch(args, cfg: ExperimentConfig) -> int:
    from .report import emit_table, records_from_jsonl, write_outputs

    out = _out_dir(args, cfg)
    if args.command == "check":
        from .checks import check_suite

        results = check_suite(cfg)
        for r in results:
            print(r.line())
        failed = [r for r in results if not r.ok]
        print(f"{len(results) - len(failed)}/{len(results)} checks passed")
        return EXIT_OK if not failed else EXIT_INTERNAL
    if args.command == "table":
        src = Path(args.records) if args.records else out / "records.jsonl"
        try:
            records = records_from_jsonl(src.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read records file {src}: {exc.strerror}") from None
        except ValueError as exc:
            raise ConfigError(f"{src}: {exc}") from None
        text = emit_table(records)
        out.mkdir(parents=True, exist_ok=True)
        (out / "table.csv").write_text(text)
        sys.stdout.write(text)
        return EXIT_OK
    variant = {"run": cfg["run.variant"], "newton": "newton", "picard": "picard"}[args.command]
    code, status, records, summary = _experiment(cfg, variant)
    write_outputs(out, records, summary)
    sys.stdout.write(emit_table(records))
    print(f"status: {status} (outputs in {out})", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
