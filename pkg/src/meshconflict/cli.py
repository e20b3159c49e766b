# -*- coding: utf-8 -*-

__all__ = ["main"]

import json
import os
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import (
    Any,
    Callable,
    Dict,
    Iterator,
    List,
    NamedTuple,
    Optional,
    Tuple,
    TypeVar,
)

import click

from . import __version__, filesystem, report
from .channels import (
    SCHEMES,
    CaConfig,
    derive_seed,
    load_assignment,
    preserves_connectivity,
    run_scheme,
    save_assignment,
)
from .config import read_config_toml
from .evaluation import (
    DEFAULT_CLIQUE_BUDGET,
    DEFAULT_PHY_RATE,
    CliqueBudgetExceeded,
    PerformanceRecord,
    evaluate,
    relative_gains,
    tid_performance_correlation,
)
from .mmcg import (
    ChannelAssignment,
    RadioGraph,
    Variant,
    build_emmcg,
    build_mmcg,
    expand,
    tid_sweep,
)
from .topology import (
    ProtocolModel,
    ProtocolModelParams,
    WmnGraph,
    build_grid,
    validate,
)

F = TypeVar("F", bound=Callable[..., Any])

VARIANTS = [str(v) for v in Variant]


def parse_grid(
    ctx: click.Context, param: click.Parameter, value: Optional[str]
) -> Optional[Tuple[int, int]]:
    if value is None:
        return None
    try:
        rows, cols = (int(part) for part in value.lower().split("x"))
    except ValueError:
        raise click.BadParameter(
            f"Expected ROWSxCOLS, e.g. 5x5, got {value!r}", ctx, param
        )
    if rows < 1 or cols < 1:
        raise click.BadParameter(
            "A grid needs positive dimensions", ctx, param
        )
    return rows, cols


def parse_channels(
    ctx: click.Context, param: click.Parameter, value: Any
) -> Tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        parts = [str(v) for v in value]
    else:
        parts = str(value).split(",")
    try:
        result = tuple(int(p) for p in parts if p.strip())
    except ValueError:
        raise click.BadParameter(f"Invalid channel list: {value}", ctx, param)
    if not result or len(set(result)) != len(result):
        raise click.BadParameter(
            "Channels must be a non-empty list of distinct integers",
            ctx,
            param,
        )
    return result


def grid_options(f: F) -> F:
    options = [
        click.option(
            "--grid",
            type=str,
            default="5x5",
            callback=parse_grid,
            help="Generate a ROWSxCOLS grid topology.",
            show_default=True,
        ),
        click.option(
            "--spacing",
            type=float,
            default=200.0,
            help="Distance between adjacent grid nodes in meters.",
            show_default=True,
        ),
        click.option(
            "--radios",
            type=click.IntRange(min=1),
            default=2,
            help="Radios per node.",
            show_default=True,
        ),
        click.option(
            "--range",
            "tx_range",
            type=float,
            default=250.0,
            help="Transmission range in meters.",
            show_default=True,
        ),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def topology_options(f: F) -> F:
    f = grid_options(f)
    f = click.option(
        "--delta",
        type=click.FloatRange(min=0.0),
        default=1.0,
        help="Interference margin of the protocol model.",
        show_default=True,
    )(f)
    return click.option(
        "--topology",
        type=click.Path(exists=True, dir_okay=False, readable=True),
        help="Read the topology from a JSON FILE instead of a grid.",
    )(f)


def assignment_options(f: F) -> F:
    f = click.option(
        "--seed",
        "seeds",
        type=int,
        multiple=True,
        default=(0,),
        help="Random seed; repeat to run several.",
        show_default=True,
    )(f)
    f = click.option(
        "--gateway",
        type=int,
        help="Gateway node id, required by the bfs scheme.",
    )(f)
    f = click.option(
        "--channels",
        type=str,
        default="1,2,3",
        callback=parse_channels,
        help="Comma separated list of available channels.",
        show_default=True,
    )(f)
    f = click.option(
        "--variant",
        "variants",
        type=click.Choice(VARIANTS),
        multiple=True,
        default=tuple(VARIANTS),
        help="Conflict graph fed to the schemes; repeat for several.",
        show_default=True,
    )(f)
    return click.option(
        "--scheme",
        "schemes",
        type=click.Choice(list(SCHEMES)),
        multiple=True,
        help="Channel assignment scheme; repeat for several.",
    )(f)


def load_topology(
    topology: Optional[str],
    grid: Optional[Tuple[int, int]],
    spacing: float,
    radios: int,
    tx_range: float,
) -> Tuple[WmnGraph, Dict[str, Any]]:
    if topology:
        g = WmnGraph.load(filesystem.read_json(Path(topology)))
        validate(g)
        return g, {"topology": str(topology)}
    rows, cols = grid or (5, 5)
    try:
        g = build_grid(rows, cols, spacing, radios, tx_range)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="'--spacing'")
    return g, {
        "grid": f"{rows}x{cols}",
        "spacing": spacing,
        "radios": radios,
        "tx_range": tx_range,
    }


def worker_count(threads: int) -> int:
    """The requested worker count, capped by MESHCONFLICT_THREADS"""
    cap = os.environ.get("MESHCONFLICT_THREADS")
    if not cap:
        return threads
    try:
        limit = int(cap)
    except ValueError:
        limit = 0
    if limit < 1:
        raise click.BadParameter(
            f"Expected a positive integer, got {cap!r}",
            param_hint="MESHCONFLICT_THREADS",
        )
    return min(threads, limit)


@contextmanager
def exit_codes(ctx: click.Context) -> Iterator[None]:
    """Map library failures onto the documented exit codes"""
    try:
        yield
    except CliqueBudgetExceeded as e:
        click.secho(str(e), err=True, fg="red")
        ctx.exit(4)
    except ValueError as e:
        click.secho(f"{type(e).__name__}: {e}", err=True, fg="red")
        ctx.exit(3)


@click.group(context_settings=dict(help_option_names=["-h", "--help"]))
@click.version_option(version=__version__)
@click.option(
    "-v",
    "--verbose",
    is_flag=True,
    help="Log more verbosely.",
)
@click.option(
    "--config",
    type=click.Path(
        exists=True,
        file_okay=True,
        dir_okay=False,
        readable=True,
        allow_dash=False,
        path_type=str,
    ),
    is_eager=True,
    callback=read_config_toml,
    help="Read configuration from FILE path.",
)
@click.pass_context
def main(ctx: click.Context, verbose: bool, config: Optional[str]) -> None:
    """Conflict graphs and channel assignment for multi-radio meshes"""
    ctx.obj = {"verbose": verbose, "config": config}
    if verbose and config:
        click.secho(f"Using configuration from {config}")


@main.command()
@grid_options
@click.option(
    "-o",
    "--output",
    type=click.Path(dir_okay=False, writable=True),
    default="topology.json",
    help="Where to write the topology.",
    show_default=True,
)
@click.pass_context
def gen(
    ctx: click.Context,
    grid: Tuple[int, int],
    spacing: float,
    radios: int,
    tx_range: float,
    output: str,
) -> None:
    """Generate a grid topology file"""
    verbose = ctx.obj["verbose"]
    with exit_codes(ctx):
        g, source = load_topology(None, grid, spacing, radios, tx_range)
        validate(g)
        path = filesystem.write_json(Path(output), g.save(), verbose=verbose)
        filesystem.write_sidecar(
            path, command="gen", config=source, version=__version__
        )
        click.secho(f"{len(g.nodes)} nodes, {len(g.edges)} edges")


@main.command()
@topology_options
@click.option(
    "--variant",
    type=click.Choice(VARIANTS),
    default=str(Variant.ENHANCED),
    help="Which conflict graph builder to use.",
    show_default=True,
)
@click.option(
    "--assignment",
    type=click.Path(exists=True, dir_okay=False, readable=True),
    help="Channel assignment CSV; every radio on one channel if omitted.",
)
@click.option(
    "-o",
    "--output",
    type=click.Path(dir_okay=False, writable=True),
    default="mmcg.json",
    help="Where to write the conflict graph.",
    show_default=True,
)
@click.option(
    "--degrees",
    type=click.Path(dir_okay=False, writable=True),
    help="Also write per-vertex interference degrees to this CSV.",
)
@click.pass_context
def mmcg(
    ctx: click.Context,
    topology: Optional[str],
    grid: Optional[Tuple[int, int]],
    spacing: float,
    radios: int,
    tx_range: float,
    delta: float,
    variant: str,
    assignment: Optional[str],
    output: str,
    degrees: Optional[str],
) -> None:
    """Build a conflict graph and print its total interference degree"""
    verbose = ctx.obj["verbose"]
    with exit_codes(ctx):
        g, source = load_topology(topology, grid, spacing, radios, tx_range)
        rg = expand(g)
        if assignment:
            ca = load_assignment(Path(assignment)).check(rg)
        else:
            ca = ChannelAssignment.all_default(rg)
        model = ProtocolModel(ProtocolModelParams(delta, g.tx_range))
        cg = build_mmcg(rg, ca, model, Variant(variant))
        config = dict(
            source, delta=delta, variant=variant, assignment=assignment
        )
        path = filesystem.write_json(Path(output), cg.save(), verbose=verbose)
        filesystem.write_sidecar(
            path, command="mmcg", config=config, version=__version__
        )
        if degrees:
            path = filesystem.write_csv(
                Path(degrees),
                ["link", "channel", "degree"],
                cg.degree_rows(),
                verbose=verbose,
            )
            filesystem.write_sidecar(
                path, command="mmcg", config=config, version=__version__
            )
        if verbose:
            click.secho(f"{variant}: {len(cg)} vertices, TID {cg.tid}")
        click.echo(cg.tid)


@main.command()
@click.option(
    "--max-n",
    type=click.IntRange(min=1),
    default=10,
    help="Sweep grids of side step*n for n = 1..MAX_N.",
    show_default=True,
)
@click.option(
    "--step",
    type=click.IntRange(min=1),
    default=5,
    help="Grid side growth per sweep step.",
    show_default=True,
)
@click.option("--spacing", type=float, default=200.0, show_default=True)
@click.option(
    "--radios", type=click.IntRange(min=1), default=2, show_default=True
)
@click.option(
    "--range", "tx_range", type=float, default=250.0, show_default=True
)
@click.option(
    "--delta", type=click.FloatRange(min=0.0), default=1.0, show_default=True
)
@click.option(
    "-o",
    "--output",
    type=click.Path(dir_okay=False, writable=True),
    default="sweep.csv",
    help="Where to write the sweep table.",
    show_default=True,
)
@click.pass_context
def sweep(
    ctx: click.Context,
    max_n: int,
    step: int,
    spacing: float,
    radios: int,
    tx_range: float,
    delta: float,
    output: str,
) -> None:
    """Compare classical and enhanced TIDs over growing grids"""
    verbose = ctx.obj["verbose"]
    with exit_codes(ctx):
        if spacing > tx_range:
            raise click.BadParameter(
                "Spacing exceeds the transmission range",
                param_hint="'--spacing'",
            )
        rows = tid_sweep(
            max_n,
            step=step,
            spacing=spacing,
            radios_per_node=radios,
            params=ProtocolModelParams(delta, tx_range),
            verbose=verbose,
        )
        header = ["n", "grid", "tid_classical", "tid_enhanced", "gap"]
        path = filesystem.write_csv(
            Path(output),
            header,
            ([row.save()[k] for k in header] for row in rows),
            verbose=verbose,
        )
        filesystem.write_sidecar(
            path,
            command="sweep",
            config=dict(
                max_n=max_n,
                step=step,
                spacing=spacing,
                radios=radios,
                tx_range=tx_range,
                delta=delta,
            ),
            version=__version__,
        )
        for row in rows:
            click.echo(
                f"{row.rows}x{row.cols},{row.tid_classical},{row.tid_enhanced}"
            )


def _check_schemes(
    schemes: Tuple[str, ...], gateway: Optional[int], g: WmnGraph
) -> None:
    if not schemes:
        raise click.BadOptionUsage(
            "scheme", "At least one '--scheme' is required"
        )
    if "bfs" in schemes and (gateway is None or gateway not in g):
        raise click.BadOptionUsage(
            "gateway", "The bfs scheme needs '--gateway' naming a node"
        )


@main.command()
@topology_options
@assignment_options
@click.option(
    "--output-dir",
    type=click.Path(file_okay=False, writable=True),
    default="assignments",
    help="Directory for assignment CSVs and the TID table.",
    show_default=True,
)
@click.pass_context
def assign(
    ctx: click.Context,
    topology: Optional[str],
    grid: Optional[Tuple[int, int]],
    spacing: float,
    radios: int,
    tx_range: float,
    delta: float,
    schemes: Tuple[str, ...],
    variants: Tuple[str, ...],
    channels: Tuple[int, ...],
    gateway: Optional[int],
    seeds: Tuple[int, ...],
    output_dir: str,
) -> None:
    """Run channel assignment schemes and report their TIDs"""
    verbose = ctx.obj["verbose"]
    with exit_codes(ctx):
        g, source = load_topology(topology, grid, spacing, radios, tx_range)
        _check_schemes(schemes, gateway, g)
        rg = expand(g)
        model = ProtocolModel(ProtocolModelParams(delta, g.tx_range))
        target = Path(output_dir)

        tids: Dict[Tuple[str, str], List[int]] = {}
        for scheme in schemes:
            for variant in variants:
                for seed in seeds:
                    cfg = _ca_config(scheme, channels, gateway, seed)
                    ca = _assign(
                        scheme, rg, cfg, model, Variant(variant), verbose
                    )
                    tid = build_emmcg(rg, ca, model).tid
                    tids.setdefault((scheme, variant), []).append(tid)
                    config = dict(
                        source,
                        delta=delta,
                        scheme=scheme,
                        variant=variant,
                        seed=seed,
                        derived_seed=cfg.seed,
                        channels=list(channels),
                        gateway=gateway,
                    )
                    path = save_assignment(
                        target / f"{scheme}-{variant}-s{seed}.csv",
                        ca,
                        verbose=verbose,
                    )
                    filesystem.write_sidecar(
                        path,
                        command="assign",
                        config=config,
                        version=__version__,
                    )
                    click.echo(f"{scheme},{variant},{seed},{tid}")

        text = report.tid_table(
            tids,
            topology=source.get("topology", source.get("grid", "")),
            channels=channels,
            seeds=seeds,
        )
        path = filesystem.write_text(
            target / "tid_table.md", text, verbose=verbose
        )
        filesystem.write_sidecar(
            path,
            command="assign",
            config=dict(
                source,
                delta=delta,
                schemes=list(schemes),
                variants=list(variants),
                seeds=list(seeds),
                channels=list(channels),
                gateway=gateway,
            ),
            version=__version__,
        )


def _ca_config(
    scheme: str,
    channel_set: Tuple[int, ...],
    gateway: Optional[int],
    seed: int,
) -> CaConfig:
    return CaConfig(tuple(channel_set), gateway, derive_seed(seed, scheme))


def _assign(
    scheme: str,
    rg: RadioGraph,
    cfg: CaConfig,
    model: ProtocolModel,
    variant: Variant,
    verbose: bool,
) -> ChannelAssignment:
    ca = run_scheme(scheme, rg, cfg, model, variant, verbose=verbose)
    if not preserves_connectivity(rg, ca):
        click.secho(
            f"{scheme} ({variant}) left the mesh disconnected", err=True
        )
    return ca


class Job(NamedTuple):
    topology: Dict[str, Any]
    delta: float
    scheme: str
    variant: str
    seed: int
    channels: Tuple[int, ...]
    gateway: Optional[int]
    cls: int
    case: str
    phy_rate: float
    clique_budget: int

    @property
    def name(self) -> str:
        return (
            f"{self.scheme}-{self.variant}-s{self.seed}"
            f"-c{self.cls}-{self.case}"
        )


def run_job(job: Job) -> Dict[str, Any]:
    """Assign channels and evaluate one (scheme, variant, seed) tuple"""
    g = WmnGraph.load(job.topology)
    rg = expand(g)
    model = ProtocolModel(ProtocolModelParams(job.delta, g.tx_range))
    cfg = _ca_config(job.scheme, job.channels, job.gateway, job.seed)
    variant = Variant(job.variant)
    ca = run_scheme(job.scheme, rg, cfg, model, variant)
    result = evaluate(
        g,
        ca,
        job.cls,
        job.case,
        job.phy_rate,
        model=model,
        clique_budget=job.clique_budget,
    )
    return {
        "scheme": job.scheme,
        "variant": job.variant,
        "seed": job.seed,
        "class": job.cls,
        "case": job.case,
        "tid": build_emmcg(rg, ca, model).tid,
        "connected": preserves_connectivity(rg, ca),
        "aggregate_mbps": result.mean,
        "runs": [r.save() for r in result.runs],
    }


@main.command(name="evaluate")
@topology_options
@assignment_options
@click.option(
    "--class",
    "cls",
    type=click.IntRange(1, 3),
    default=2,
    help="Test case class: 1 sustenance, 2 injection, 3 load.",
    show_default=True,
)
@click.option(
    "--case",
    type=str,
    default="5",
    help="Case within the class, e.g. 3, 5 or H5V5D2.",
    show_default=True,
)
@click.option(
    "--phy-rate",
    type=click.FloatRange(min=0.0, min_open=True),
    default=DEFAULT_PHY_RATE,
    help="PHY data rate in Mbps.",
    show_default=True,
)
@click.option(
    "--clique-budget",
    type=click.IntRange(min=1),
    default=DEFAULT_CLIQUE_BUDGET,
    help="Give up beyond this many maximal cliques per flow set.",
    show_default=True,
)
@click.option(
    "--threads",
    type=click.IntRange(min=1),
    default=1,
    help=(
        "Worker processes for independent runs; MESHCONFLICT_THREADS "
        "caps it."
    ),
    show_default=True,
)
@click.option(
    "--output-dir",
    type=click.Path(file_okay=False, writable=True),
    default="results",
    help="Directory for per-run JSON and the results CSV.",
    show_default=True,
)
@click.option(
    "--correlate",
    is_flag=True,
    help="Report the rank correlation of TID and throughput.",
)
@click.option(
    "--compare",
    is_flag=True,
    help="Write percent gains between variants and against --base.",
)
@click.option(
    "--base",
    type=str,
    default="bfs",
    help="Reference scheme for --compare.",
    show_default=True,
)
@click.pass_context
def evaluate_command(
    ctx: click.Context,
    topology: Optional[str],
    grid: Optional[Tuple[int, int]],
    spacing: float,
    radios: int,
    tx_range: float,
    delta: float,
    schemes: Tuple[str, ...],
    variants: Tuple[str, ...],
    channels: Tuple[int, ...],
    gateway: Optional[int],
    seeds: Tuple[int, ...],
    cls: int,
    case: str,
    phy_rate: float,
    clique_budget: int,
    threads: int,
    output_dir: str,
    correlate: bool,
    compare: bool,
    base: str,
) -> None:
    """Assign channels and measure scheduled throughput on grid flows"""
    verbose = ctx.obj["verbose"]
    with exit_codes(ctx):
        g, source = load_topology(topology, grid, spacing, radios, tx_range)
        _check_schemes(schemes, gateway, g)
        jobs = [
            Job(
                g.save(),
                delta,
                scheme,
                variant,
                seed,
                tuple(channels),
                gateway,
                cls,
                case,
                phy_rate,
                clique_budget,
            )
            for scheme in schemes
            for variant in variants
            for seed in seeds
        ]
        target = Path(output_dir)
        runs_dir = target / "runs"

        workers = worker_count(threads)
        if verbose:
            click.secho(
                f"Running {len(jobs)} jobs, worker processes: {workers}"
            )
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(run_job, jobs))
        else:
            results = [run_job(job) for job in jobs]

        for job, result in zip(jobs, results):
            path = filesystem.write_json(
                runs_dir / f"{job.name}.json", result, verbose=verbose
            )
            filesystem.write_sidecar(
                path,
                command="evaluate",
                config=dict(
                    source,
                    delta=job.delta,
                    scheme=job.scheme,
                    variant=job.variant,
                    seed=job.seed,
                    channels=list(job.channels),
                    gateway=job.gateway,
                    cls=job.cls,
                    case=job.case,
                    phy_rate=job.phy_rate,
                    clique_budget=job.clique_budget,
                ),
                version=__version__,
            )
            if not result["connected"]:
                click.secho(f"{job.name} is disconnected", err=True)
            click.echo(
                f"{job.scheme},{job.variant},{job.seed},"
                f"{result['tid']},{result['aggregate_mbps']:.4f}"
            )

        config = dict(
            source,
            delta=delta,
            schemes=list(schemes),
            variants=list(variants),
            seeds=list(seeds),
            channels=list(channels),
            gateway=gateway,
            cls=cls,
            case=case,
            phy_rate=phy_rate,
            clique_budget=clique_budget,
        )
        everything = [
            filesystem.read_json(p)
            for p in sorted(runs_dir.glob("*.json"))
            if not p.name.endswith(".meta.json")
        ]
        path = filesystem.write_csv(
            target / "results.csv",
            [
                "scheme",
                "variant",
                "seed",
                "class",
                "case",
                "tid",
                "aggregate_mbps",
                "per_flow",
            ],
            (
                [
                    r["scheme"],
                    r["variant"],
                    r["seed"],
                    r["class"],
                    r["case"],
                    r["tid"],
                    r["aggregate_mbps"],
                    json.dumps(
                        [
                            [f["mbps"] for f in run["flows"]]
                            for run in r["runs"]
                        ]
                    ),
                ]
                for r in everything
            ),
            verbose=verbose,
        )
        filesystem.write_sidecar(
            path, command="evaluate", config=config, version=__version__
        )

        current = [
            PerformanceRecord.load(r)
            for r in everything
            if str(r["class"]) == str(cls) and str(r["case"]) == str(case)
        ]
        correlation = None
        if correlate:
            correlation = _write_correlation(
                target, current, config, verbose=verbose
            )
        if compare:
            path = filesystem.write_json(
                target / "comparison.json",
                relative_gains(current, base=base),
                verbose=verbose,
            )
            filesystem.write_sidecar(
                path, command="evaluate", config=config, version=__version__
            )

        text = report.evaluation_table(
            current,
            cls=cls,
            case=case,
            phy_rate=phy_rate,
            seeds=seeds,
            correlation=correlation,
        )
        path = filesystem.write_text(
            target / "report.md", text, verbose=verbose
        )
        filesystem.write_sidecar(
            path, command="evaluate", config=config, version=__version__
        )


def _write_correlation(
    target: Path,
    records: List[PerformanceRecord],
    config: Dict[str, Any],
    *,
    verbose: bool = False,
) -> float:
    """Correlate mean TID with mean throughput, one point per assignment
    family"""
    grouped: Dict[Tuple[str, str], List[PerformanceRecord]] = {}
    for r in records:
        grouped.setdefault((r.scheme, str(r.variant)), []).append(r)
    points = [
        (
            f"{scheme}-{variant}",
            sum(r.tid for r in group) / len(group),
            sum(r.aggregate for r in group) / len(group),
        )
        for (scheme, variant), group in sorted(grouped.items())
    ]
    rho = tid_performance_correlation(points)
    path = filesystem.write_json(
        target / "correlation.json",
        {
            "spearman_rho": rho,
            "points": [
                {"assignment": name, "tid": tid, "aggregate_mbps": agg}
                for name, tid, agg in points
            ],
        },
        verbose=verbose,
    )
    filesystem.write_sidecar(
        path, command="evaluate", config=config, version=__version__
    )
    click.echo(f"spearman_rho,{rho:.4f}")
    return rho
