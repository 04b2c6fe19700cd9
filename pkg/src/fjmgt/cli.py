"""Command-line entry point: ``fjmgt <command> CONFIG [--out DIR] [--jobs N]``.

Exit codes: 0 pass, 1 certificate or acceptance failure, 2 configuration
error, 3 solver failure, 4 input/output error.  Failures print a single
line ``error[<tag>]: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from .errors import CaseMismatch, ConfigError, FjmgtError, OutputError
from .io import load_run, resolve_out_dir, write_csv, write_manifest

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3, 4
MANUFACTURED_MIN_ORDER = 1.8


def _assumptions_for(pair):
    """Kernel assumptions behind the analysis path that applies to ``pair``."""
    if pair.k1.is_delta and pair.scenario_tag in ("JMGT", "GFE_III", "Custom"):
        return ["A2", "A3"]
    ids = ["H2", "H3", "H4"]
    s1, s2 = pair.k1.singularity_index, pair.k2.singularity_index
    if s2 <= s1:
        ids.append("H5_I")
    if s2 >= s1:
        ids.append("H5_II")
    return ids


def cmd_kernel_validate(run, out_dir, jobs):
    from .coercivity import certify

    cfg = run.config
    ids = _assumptions_for(cfg.pair)

    def one(aid):
        return certify(aid, cfg.pair, tau=cfg.tau, grid=(1e-3, 1.0), trials=run.trials,
                       seed=run.seed, delta=cfg.delta if cfg.delta > 0 else 1.0, c=cfg.c)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        certs = list(pool.map(one, ids))
    for cert in certs:
        print(cert.summary())
    path = write_csv(certs, out_dir / "certificates.csv")
    ok = all(c.passed for c in certs)
    return ok, [path], {"certificates": [c.summary() for c in certs]}


def cmd_solve(run, out_dir, jobs):
    from .experiments import solve_scenario

    traj = solve_scenario(run.config, run.data)
    path = write_csv(traj, out_dir / "trajectory.csv")
    iters = traj.meta.get("iterations", 0)
    print(f"solved {run.config.pair.scenario_tag} tau={run.config.tau:g}: {len(traj)} rows, "
          f"{iters} Picard iteration(s) -> {path}")
    return True, [path], {"iterations": iters, "residuals": traj.meta.get("residuals", [])}


def cmd_sweep(run, out_dir, jobs):
    from .experiments import tau_sweep

    if len(run.taus) < 3:
        raise ConfigError("sweep needs at least three values in [scenario] taus")
    result = tau_sweep(run.config, run.taus, run.data, jobs=jobs)
    path = write_csv(result, out_dir / "sweep.csv")
    for e in result.entries:
        print(f"tau={e.tau:<10g} error={e.error:.6e} peak_energy={e.peak_energy:.6e} "
              f"iterations={e.iterations} {e.status}")
    extra = {"failed": [e.tau for e in result.entries if e.status != "ok"]}
    if len(result.ok) >= 3:
        fit = result.fit()
        print(f"fitted order {fit.slope:.4f} (residual {fit.residual:.3g}); "
              f"energy spread {result.energy_spread():.3f}")
        extra.update(order=fit.slope, residual=fit.residual, energy_spread=result.energy_spread())
    ok = not extra["failed"]
    return ok, [path], extra


def cmd_converge(run, out_dir, jobs):
    from .experiments import manufactured_test, self_convergence

    cfg = run.config
    manufactured = cfg.pair.k1.is_delta and cfg.pair.k2.kind == "one" and cfg.mode == "Linear"
    if manufactured:
        h = cfg.h
        result = manufactured_test(cfg, hs=(4 * h, 2 * h, h))
        ok = result.order >= MANUFACTURED_MIN_ORDER
    else:
        result = self_convergence(cfg, run.data)
        ok = True
    path = write_csv(result, out_dir / "converge.csv")
    for h, e in zip(result.hs, result.errors):
        print(f"h={h:<10g} error={e:.6e}")
    kind = "manufactured" if manufactured else "self-convergence"
    print(f"{kind} order {result.order:.4f}")
    return ok, [path], {"kind": kind, "order": result.order}


def cmd_energy(run, out_dir, jobs):
    from .experiments import solve_scenario, energy_report, peak_energy

    cfg = run.config
    traj = solve_scenario(cfg, run.data)
    records = energy_report(traj, cfg.c, cfg.alpha if cfg.alpha is not None else 1.0)
    path = write_csv(records, out_dir / "energy.csv")
    print(f"peak discrete energy {peak_energy(records):.6e} over {len(records)} records -> {path}")
    return True, [path], {"peak_energy": peak_energy(records)}


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "converge": cmd_converge,
    "energy": cmd_energy,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fjmgt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="TOML run description")
        p.add_argument("--out", default=None, help="output directory (overrides [output] out_dir)")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers")

    kernel = sub.add_parser("kernel", help="kernel diagnostics")
    ksub = kernel.add_subparsers(dest="kernel_command", required=True)
    common(ksub.add_parser("validate", help="certify the kernel assumptions of the scenario"))
    common(sub.add_parser("solve", help="single run, trajectory CSV"))
    common(sub.add_parser("sweep", help="tau sweep against the limiting problem with order fit"))
    common(sub.add_parser("converge", help="manufactured or self-convergence order in dt"))
    common(sub.add_parser("energy", help="discrete energy report of a single run"))
    return parser


def _fail(exc: FjmgtError) -> None:
    msg = " ".join(str(exc).split())
    print(f"error[{exc.tag}]: {msg}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = load_run(args.config)
    except ConfigError as exc:
        _fail(exc)
        return EXIT_CONFIG
    except OutputError as exc:
        _fail(exc)
        return EXIT_IO
    out_dir = resolve_out_dir(run.out_dir, args.out)
    handler = cmd_kernel_validate if args.command == "kernel" else COMMANDS[args.command]
    start = time.perf_counter()
    try:
        ok, outputs, extra = handler(run, out_dir, args.jobs)
    except ConfigError as exc:
        _fail(exc)
        return EXIT_CONFIG
    except OutputError as exc:
        _fail(exc)
        return EXIT_IO
    except CaseMismatch as exc:
        _fail(exc)
        return EXIT_FAIL
    except FjmgtError as exc:
        _fail(exc)
        try:
            write_manifest(out_dir, run.config, f"error: {exc.tag}", time.perf_counter() - start, run.seed)
        except OutputError:
            pass
        return EXIT_SOLVER
    status = "pass" if ok else "fail"
    try:
        write_manifest(out_dir, run.config, status, time.perf_counter() - start, run.seed, outputs, extra)
    except OutputError as exc:
        _fail(exc)
        return EXIT_IO
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
