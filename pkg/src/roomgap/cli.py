"""Command-line entry point: ``roomgap {limit,bands,converge,mesh-dump}``.

Exit codes: 0 success, 1 numerical failure (including a failed gap check),
2 usage or I/O error, 3 invalid configuration.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

from roomgap import __version__
from roomgap.bands import compute_bands, convergence_study
from roomgap.config import RunConfig, parse_config
from roomgap.emit import band_svg, eps_tag, write_csv, write_json
from roomgap.errors import ConfigParseError, ConfigValidationError, RoomgapError
from roomgap.floquet import brillouin_grid
from roomgap.geometry import build_cell
from roomgap.limitspec import LimitParams, limit_fiber_bands, solve_beta_star
from roomgap.mesh import dump, triangulate


EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE, EXIT_CONFIG = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _limit_params(cfg: RunConfig) -> LimitParams:
    p = cfg.preset
    return LimitParams(float(p.alpha), float(p.r), float(p.L))


def _require_eps(cfg: RunConfig) -> None:
    if not cfg.eps_list:
        raise ConfigValidationError("eps_list: required for this command", fields=["eps_list"])


def cmd_limit(cfg: RunConfig, out: str, threads: int = 1) -> int:
    lp = _limit_params(cfg)
    edge = solve_beta_star(lp, tol=cfg.root_tol)
    phis = brillouin_grid(cfg.n_phi)
    fibers = [limit_fiber_bands(lp, float(phi), lam_max=cfg.lambda_max, tol=cfg.root_tol) for phi in phis]
    if "json" in cfg.formats:
        write_json(os.path.join(out, "limit_spectrum.json"), {
            "alpha": lp.alpha,
            "r": lp.r,
            "L": lp.L,
            "beta": None if edge is None else edge.beta,
            "mu_star": None if edge is None else edge.mu,
            "has_gap": edge is not None,
            "threshold": lp.threshold,
            "lambda_max": cfg.lambda_max,
            "fiber_bands": [{"phi": fb.phi, "lower": fb.lower.tolist(), "upper": fb.upper.tolist()}
                            for fb in fibers],
        })
    if "csv" in cfg.formats:
        rows = []
        for fb in fibers:
            for family, vals in (("lower", fb.lower), ("upper", fb.upper)):
                rows += [(fb.phi, family, k, lam) for k, lam in enumerate(vals, start=1)]
        write_csv(os.path.join(out, "limit_bands.csv"), ("phi", "family", "k", "lambda"), rows)
    return EXIT_OK


def cmd_bands(cfg: RunConfig, out: str, threads: int = 1) -> int:
    _require_eps(cfg)
    lp = _limit_params(cfg)
    edge = None if cfg.control else solve_beta_star(lp, tol=cfg.root_tol)
    band_rows, gap_rows = [], []
    for eps in cfg.eps_list:
        bs = compute_bands(cfg.params_at(eps), cfg.mesh, cfg.n_phi, cfg.k, cfg.lambda_max, cfg.eig_tol, threads)
        for i, phi in enumerate(bs.phi_grid):
            band_rows += [(bs.eps, phi, k, lam) for k, lam in enumerate(bs.eigenvalues[i], start=1)]
        gap_rows += [(bs.eps, g.lo, g.hi, g.truncated) for g in bs.gaps]
        if "svg" in cfg.formats:
            svg = band_svg(bs.phi_grid, bs.eigenvalues, cfg.lambda_max,
                           alpha=None if cfg.control else lp.alpha,
                           beta=None if edge is None else edge.beta, title=f"eps = 1/{eps.denominator}")
            with open(os.path.join(out, f"bands_eps{eps_tag(eps)}.svg"), "w", encoding="utf-8") as fh:
                fh.write(svg)
    if "csv" in cfg.formats:
        write_csv(os.path.join(out, "bands.csv"), ("eps", "phi", "k", "lambda"), band_rows)
        write_csv(os.path.join(out, "gaps.csv"), ("eps", "gap_lo", "gap_hi", "truncated"), gap_rows)
    return EXIT_OK


def cmd_converge(cfg: RunConfig, out: str, threads: int = 1) -> int:
    _require_eps(cfg)
    rep = convergence_study(cfg.preset, cfg.eps_list, cfg.mesh, cfg.n_phi, cfg.lambda_max, cfg.k, cfg.eig_tol,
                            cfg.delta_frac, cfg.control, threads, R=cfg.R)
    rows = []
    for e in rep.entries:
        ok = not e.structure.true_gaps() if rep.control else e.corollary_pass
        rows.append((e.eps, e.hausdorff, None if e.gap is None else e.gap.lo, None if e.gap is None else e.gap.hi,
                     ok, e.pi_residual_median))
    if "csv" in cfg.formats:
        write_csv(os.path.join(out, "convergence.csv"),
                  ("eps", "hausdorff", "gap_lo", "gap_hi", "corollary_pass", "pi_residual_median"), rows)
    if "json" in cfg.formats:
        write_json(os.path.join(out, "convergence_summary.json"), {
            "alpha": rep.alpha,
            "beta": rep.beta,
            "delta": rep.delta,
            "window": list(rep.window),
            "control": rep.control,
            "hausdorff_monotone": rep.hausdorff_monotone,
            "corollary_pass": rep.corollary_pass,
            "entries": [{
                "eps": e.eps,
                "hausdorff": e.hausdorff,
                "gap": None if e.gap is None else [e.gap.lo, e.gap.hi],
                "avoids_gap_core": e.avoids_gap_core,
                "hits_alpha": e.hits_alpha,
                "hits_beta": e.hits_beta,
                "pi_residual_median": e.pi_residual_median,
                "n_pi_samples": int(len(e.pi_residuals)),
                "bands": e.structure.bands.tolist(),
            } for e in rep.entries],
        })
    return EXIT_OK if rep.corollary_pass else EXIT_NUMERICAL


def cmd_mesh_dump(cfg: RunConfig, out: str, threads: int = 1) -> int:
    _require_eps(cfg)
    m = cfg.mesh
    for eps in cfg.eps_list:
        mesh = triangulate(build_cell(cfg.params_at(eps)), m.target_h, m.grading, m.passage_cols, m.passage_aspect)
        with open(os.path.join(out, f"mesh_eps{eps_tag(eps)}.txt"), "w", encoding="utf-8") as fh:
            fh.write(dump(mesh))
    return EXIT_OK


COMMANDS = {"limit": cmd_limit, "bands": cmd_bands, "converge": cmd_converge, "mesh-dump": cmd_mesh_dump}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="roomgap", description="Band gaps of a strip with periodic room-and-passage protuberances.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="TOML run configuration")
        sp.add_argument("--out", help="existing output directory (overrides output.directory)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for the phase sweep")
        sp.add_argument("--seed", type=int, default=None, help="reserved; every algorithm is deterministic")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}")
        cfg = parse_config(text)
        out = args.out if args.out is not None else cfg.directory
        if not os.path.isdir(out):
            raise UsageError(f"output directory does not exist: {out}")
        return COMMANDS[args.command](cfg, out, args.threads)
    except (ConfigParseError, ConfigValidationError) as exc:
        where = ""
        if exc.details.get("line") is not None:
            where = f" (line {exc.details['line']}, column {exc.details['column']})"
        print(f"{exc.code}: {exc}{where}", file=sys.stderr)
        return EXIT_CONFIG
    except (UsageError, OSError) as exc:
        print(f"IO_ERROR: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RoomgapError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
