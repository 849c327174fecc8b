"""Command-line entry point: ``mixedswe {mesh,run,verify,spectrum}``.

Exit status is 0 when every declared threshold passes, 1 when a threshold
fails (the failing metric is printed) and 2 on usage or parameter errors.
"""

from __future__ import annotations

import argparse
import inspect
import os
import sys

OUT_ENV = "MIMETIC_SWE_OUT"
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _version() -> str:
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def parse_mesh_spec(spec: str):
    """Build a mesh from ``kind:args``.

    Kinds: periodic:n, square:n[,jitter], channel:nx,ny, disk:rings,
    cylinder:na,nz, icosa:level, file:PATH (native format or Gmsh .msh).
    """
    from . import mesh as msh

    kind, _, arg = spec.partition(":")
    if not arg:
        raise UsageError(f"mesh spec {spec!r} needs the form kind:args")
    if kind == "file":
        with open(arg) as fh:
            text = fh.read()
        return msh.load_gmsh(text) if arg.endswith(".msh") else msh.load_mesh(text)
    try:
        nums = [float(x) for x in arg.split(",")]
    except ValueError:
        raise UsageError(f"bad numbers in mesh spec {spec!r}") from None
    ints = [int(x) for x in nums]
    builders = {
        "periodic": (1, lambda: msh.build_periodic_square(ints[0])),
        "square": (None, lambda: msh.build_square(ints[0], jitter=nums[1] if len(nums) > 1 else 0.0, seed=0)),
        "channel": (2, lambda: msh.build_channel(ints[0], ints[1])),
        "disk": (1, lambda: msh.build_disk(ints[0])),
        "cylinder": (2, lambda: msh.build_cylinder(ints[0], ints[1])),
        "icosa": (1, lambda: msh.build_icosahedral_sphere(ints[0])),
    }
    if kind not in builders:
        raise UsageError(f"unknown mesh kind {kind!r}; choose from {sorted(builders) + ['file']}")
    nargs, build = builders[kind]
    if nargs is not None and len(nums) != nargs:
        raise UsageError(f"mesh kind {kind!r} takes {nargs} argument(s)")
    return build()


def out_root(args) -> str:
    return args.out or os.environ.get(OUT_ENV) or "runs"


# --------------------------------------------------------------------------
# result reporting


def _threshold_text(th) -> str:
    kind, ref = th
    return f"< {ref:g}" if kind == "<" else f"{ref[0]:g} +/- {ref[1]:g}"


def write_result(res, directory, argv, config, meshes=(), dump=False) -> list:
    """Write metrics.csv, diagnostics.csv, VTK snapshots and the manifest."""
    from . import io
    from . import operators as op

    os.makedirs(directory, exist_ok=True)
    rows = []
    for k in sorted(res.metrics):
        th = res.thresholds.get(k)
        rows.append([k, float(res.metrics[k]), _threshold_text(th) if th else "", res.check(k) if th else ""])
    io.write_csv(os.path.join(directory, "metrics.csv"), ["metric", "value", "threshold", "passed"], rows)
    outputs = ["metrics.csv"]
    if res.series:
        io.write_diagnostics(os.path.join(directory, "diagnostics.csv"), res.series)
        outputs.append("diagnostics.csv")
    for i, (_, state) in enumerate(res.snapshots):
        name = f"snapshot_{i:03d}.vtk"
        io.write_vtk(os.path.join(directory, name), res.ops, state, title=res.name)
        outputs.append(name)
    if dump and res.ops is not None:
        for p in op.dump_matrices(res.ops, os.path.join(directory, "matrices")):
            outputs.append(os.path.relpath(p, directory))
    if res.ops is not None:
        meshes = list(meshes) + [res.ops.mesh]
    failed = res.failures()
    manifest = {
        "command": list(argv),
        "name": res.name,
        "config": config,
        "params": res.params,
        "mesh_checksums": sorted({m.checksum() for m in meshes}),
        "version": _version(),
        "metrics": {
            k: {
                "value": float(v),
                "threshold": _threshold_text(res.thresholds[k]) if k in res.thresholds else None,
                "passed": res.check(k) if k in res.thresholds else None,
            }
            for k, v in res.metrics.items()
        },
        "failed_metrics": failed,
        "passed": res.passed,
        "outputs": outputs,
    }
    io.write_manifest(os.path.join(directory, "manifest.json"), manifest)
    return failed


def report(res, failed, stream=None) -> None:
    stream = stream or sys.stdout
    for k in sorted(res.metrics):
        th = res.thresholds.get(k)
        status = ("PASS" if res.check(k) else "FAIL") if th else "INFO"
        extra = f" ({_threshold_text(th)})" if th else ""
        print(f"{status} {res.name}.{k} = {res.metrics[k]:.6g}{extra}", file=stream)


# --------------------------------------------------------------------------
# run


def scenario_kwargs(name, args, config) -> dict:
    from . import scenarios as sc

    fn = sc.SCENARIOS[name]
    params = inspect.signature(fn).parameters
    kw = {}
    for k, v in config.items():
        if k not in params:
            raise UsageError(f"config key {k!r} is not a parameter of scenario {name!r}")
        kw[k] = v
    if args.seed is not None and "seed" in params:
        kw["seed"] = args.seed
    if args.sizes:
        if "sizes" not in params:
            raise UsageError("--sizes only applies to the rossby scenario")
        kw["sizes"] = args.sizes
    if args.solver:
        kw["solver"] = args.solver
    if args.mesh:
        kind, _, arg = args.mesh.partition(":")
        if name == "solid-rotation":
            if kind != "icosa":
                raise UsageError("solid-rotation needs an icosa:level mesh")
            kw["level"] = int(arg)
        elif "mesh" in params:
            kw["mesh"] = args.mesh
        else:
            raise UsageError(f"scenario {name!r} does not take --mesh")
    return kw


def _run_one(name, kw, directory, argv, dump):
    from . import scenarios as sc

    config = dict(kw)
    if isinstance(kw.get("mesh"), str):
        kw = dict(kw, mesh=parse_mesh_spec(kw["mesh"]))
    res = sc.SCENARIOS[name](**kw)
    failed = write_result(res, directory, argv, config, dump=dump)
    return res, failed


def cmd_run(args, argv) -> int:
    from . import io
    from . import scenarios as sc

    names = list(sc.SCENARIOS) if args.scenario == ["all"] else args.scenario
    for n in names:
        if n not in sc.SCENARIOS:
            raise UsageError(f"unknown scenario {n!r}; choose from {sorted(sc.SCENARIOS)}")
    config = io.load_config(args.config) if args.config else {}
    jobs = []
    for n in names:
        directory = os.path.join(out_root(args), n)
        jobs.append((n, scenario_kwargs(n, args, config), directory, argv, args.dump_matrices))

    if args.threads and args.threads > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(_run_star, jobs))
    else:
        results = [_run_one(*j) for j in jobs]

    code = EXIT_OK
    for res, failed in results:
        report(res, failed)
        if failed or not res.passed:
            code = EXIT_FAIL
            print(f"{res.name}: failed metric(s): {', '.join(failed) or 'non-finite value'}", file=sys.stderr)
    return code


def _run_star(job):
    res, failed = _run_one(*job)
    res.ops = None  # not picklable cheaply; outputs are already written
    return res, failed


# --------------------------------------------------------------------------
# verify / spectrum / mesh


def cmd_verify(args, argv) -> int:
    from . import verify as vf

    mesh = parse_mesh_spec(args.mesh or "periodic:4")
    names = list(vf.SUITES) if args.suite == "all" else [args.suite]
    code = EXIT_OK
    for n in names:
        kw = {}
        params = inspect.signature(vf.SUITES[n]).parameters
        if "seed" in params and args.seed is not None:
            kw["seed"] = args.seed
        if args.samples is not None and "samples" in params:
            kw["samples"] = args.samples
        if args.steps is not None and "nsteps" in params:
            kw["nsteps"] = args.steps
        res = vf.SUITES[n](mesh, **kw)
        failed = write_result(res, os.path.join(out_root(args), f"verify-{n}"), argv, kw, meshes=[mesh])
        report(res, failed)
        if failed:
            code = EXIT_FAIL
            print(f"{n}: failed metric(s): {', '.join(failed)}", file=sys.stderr)
    return code


def cmd_spectrum(args, argv) -> int:
    from . import analysis as an
    from . import dynamics as dyn
    from . import io
    from . import operators as op
    from .scenarios import ScenarioResult

    mesh = parse_mesh_spec(args.mesh or "periodic:2")
    cfg = dyn.ModelConfig(c2=args.c2, f_coeffs=args.f, dt=1.0)
    ops = op.assemble(mesh, cfg, pair=args.pair)
    n = ops.dim_S + ops.dim_V
    if n > 4000:
        raise UsageError(f"dense spectrum of {n} unknowns is too large; use a coarser mesh")
    census = an.generator_spectrum(ops, cfg)
    res = ScenarioResult("spectrum", ops=ops, params={"pair": args.pair, "c2": args.c2, "f": args.f})
    res.metrics = {
        "zero_mode_defect": float(abs(census.zero_modes - census.expected_zero)),
        "zero_modes": float(census.zero_modes),
        "ig_modes": float(census.ig_modes),
        "max_real_part": census.max_real_part,
        "pairing_error": census.pairing_error,
        "inf_sup": op.inf_sup_estimate(ops),
    }
    res.thresholds = {
        "zero_mode_defect": ("<", 0.5),
        "max_real_part": ("<", 1e-10),
        "pairing_error": ("<", 1e-10),
    }
    if mesh.n_face <= 200:
        kv, ke = an.double_projection_kernels(ops)
        res.metrics["kernel_PVPE"], res.metrics["kernel_PEPV"] = float(kv), float(ke)
    directory = os.path.join(out_root(args), "spectrum")
    failed = write_result(res, directory, argv, vars_config(args), meshes=[mesh], dump=args.dump_matrices)
    io.write_csv(
        os.path.join(directory, "frequencies.csv"), ["index", "omega"], [[i, w] for i, w in enumerate(census.frequencies)]
    )
    rows = an.spurious_branch_probe(args.pair, [(args.mesh or "periodic:2", mesh)]) if mesh.n_face <= 200 else []
    if rows:
        an.write_report(rows, os.path.join(directory, "branches.csv"))
    report(res, failed)
    if failed:
        print(f"spectrum: failed metric(s): {', '.join(failed)}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def vars_config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func",) and v is not None}


def cmd_mesh(args, argv) -> int:
    import json

    from . import elements as el
    from . import io
    from . import mesh as msh
    from .errors import InvariantViolation

    if args.action == "convert":
        if not args.input or not args.output:
            raise UsageError("mesh convert needs INPUT and OUTPUT")
        m = parse_mesh_spec("file:" + args.input)
        io._atomic_write(args.output, msh.dump_mesh(m))
    else:
        if args.input:
            args.mesh = "file:" + args.input
        if not args.mesh:
            raise UsageError(f"mesh {args.action} needs --mesh SPEC or an input file")
        m = parse_mesh_spec(args.mesh)
    try:
        msh.validate(m)
        valid = True
    except InvariantViolation as exc:
        print(f"FAIL mesh invariant: {exc}", file=sys.stderr)
        valid = False
    info = dict(el.dof_census(m), kind=m.kind.value, checksum=m.checksum(), valid=valid)
    print(json.dumps(info, sort_keys=True))
    if args.action == "generate":
        directory = out_root(args)
        io._atomic_write(os.path.join(directory, "mesh.txt"), msh.dump_mesh(m))
        io.write_manifest(
            os.path.join(directory, "mesh_manifest.json"),
            {"command": list(argv), "mesh": args.mesh, "version": _version(), **info},
        )
    return EXIT_OK if valid else EXIT_FAIL


# --------------------------------------------------------------------------


def _sizes(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output root (default ${OUT_ENV} or ./runs)")
    common.add_argument("--mesh", help="periodic:n, square:n[,jitter], channel:nx,ny, disk:rings, cylinder:na,nz, icosa:level, file:PATH")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=1, help="worker processes; 1 forces deterministic single-thread BLAS")
    common.add_argument("--dump-matrices", action="store_true", help="write operators in Matrix Market format")

    p = argparse.ArgumentParser(prog="mixedswe", description="Mixed finite-element linear shallow-water model.")
    sub = p.add_subparsers(dest="command", required=True)

    pm = sub.add_parser("mesh", parents=[common], help="generate, validate or convert meshes")
    pm.add_argument("action", choices=["generate", "validate", "convert"])
    pm.add_argument("input", nargs="?")
    pm.add_argument("output", nargs="?")
    pm.set_defaults(func=cmd_mesh)

    pr = sub.add_parser("run", parents=[common], help="run named scenarios ('all' for every one)")
    pr.add_argument("scenario", nargs="+")
    pr.add_argument("--config", help="key = value file of scenario parameters")
    pr.add_argument("--sizes", type=_sizes, help="mesh sizes for the convergence study, e.g. 8,16,32")
    pr.add_argument("--solver", choices=["monolithic", "hybridized"])
    pr.set_defaults(func=cmd_run)

    pv = sub.add_parser("verify", parents=[common], help="property suites")
    pv.add_argument("suite", choices=["commuting", "conservation", "steady", "census", "all"])
    pv.add_argument("--samples", type=int)
    pv.add_argument("--steps", type=int)
    pv.set_defaults(func=cmd_verify)

    ps = sub.add_parser("spectrum", parents=[common], help="mode census and projection kernels")
    ps.add_argument("--pair", default="bdfm1", choices=["bdfm1", "rt0"])
    ps.add_argument("--c2", type=float, default=1.0)
    ps.add_argument("--f", type=float, default=1.0)
    ps.set_defaults(func=cmd_spectrum)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    for var in THREAD_VARS:
        os.environ.setdefault(var, "1")

    from .errors import InvalidParameterError, MeshParseError

    try:
        return args.func(args, ["mixedswe"] + argv)
    except (UsageError, InvalidParameterError, MeshParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
