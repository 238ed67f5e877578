"""Command-line entry point.

Exit codes: 0 success, 1 domain errors (bad instance, terminal start,
generation failure), 2 usage errors. With ``--format json`` every
subcommand emits exactly one JSON document with sorted keys, so a fixed
invocation plus seed is byte-reproducible.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import click

from .errors import IdgError
from .game_core import is_terminal
from .gridworld import (
    generate_random,
    parse_instance,
    serialize_instance,
    to_idg,
)
from .learn import (
    TrainConfig,
    curves_to_csv,
    evaluate,
    parse_follower_table,
    parse_leader_table,
    serialize_follower_table,
    serialize_leader_table,
    train,
)
from .solver import (
    detect_safety_traps,
    follower_optimal_policy,
    always_obey_policy,
    fully_informed_leader,
    leader_replanning_policy,
    render_equilibrium_report,
    render_trap_report,
    solve_1idg,
    solve_n_idg,
)


def domain_errors(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except IdgError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def emit(ctx, text: str, payload: dict) -> None:
    if ctx.obj["format"] == "json":
        out = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        out = text
    path = ctx.obj["output"]
    if path:
        Path(path).write_text(out)
    else:
        click.echo(out, nl=False)


def load_instance(path: str):
    grid = parse_instance(Path(path).read_text())
    return grid, to_idg(grid)


def frac(x: Fraction) -> str:
    return str(x)


@click.group()
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["text", "json"]),
    default="text",
    help="Output format; json is the stable machine contract.",
)
@click.option(
    "--seed",
    type=int,
    default=None,
    envvar="IDG_SEED",
    help="Global seed default (env IDG_SEED).",
)
@click.option("--output", "-o", type=click.Path(), default=None)
@click.pass_context
def cli(ctx, fmt, seed, output):
    ctx.obj = {"format": fmt, "seed": seed if seed is not None else 0, "output": output}


@cli.command()
@click.argument("instance", type=click.Path(exists=True))
@click.option("--horizon", type=int, default=1)
@click.pass_context
@domain_errors
def solve(ctx, instance, horizon):
    """Equilibrium analysis at the start state."""
    grid, inst = load_instance(instance)
    if is_terminal(inst, inst.start):
        raise IdgError("start state is terminal; nothing to solve")
    if horizon == 1:
        rep = solve_1idg(inst, inst.start)
        payload = {
            "kind": "1idg",
            "state": inst.state_label(rep.state),
            "case": rep.case,
            "leader_strategy": {
                inst.action_label(rep.state, a): frac(p)
                for a, p in rep.leader_distribution.items()
            },
            "follower_decisions": {
                inst.action_label(rep.state, a): d.value
                for a, d in rep.follower_decisions.items()
            },
            "expected": {
                "leader": frac(rep.expected_leader),
                "follower": frac(rep.expected_follower),
            },
            "certified": rep.deviations.certified,
            "deviations": [
                {
                    "player": e.player,
                    "state": inst.state_label(e.state),
                    "steps_remaining": e.steps_remaining,
                    "deviation": e.description,
                    "delta": frac(e.delta),
                }
                for e in rep.deviations.entries
            ],
        }
        emit(ctx, render_equilibrium_report(inst, rep), payload)
    else:
        profile, values = solve_n_idg(inst, horizon)
        start_values = {
            str(k): {
                "leader": frac(values[(inst.start, k)][0]),
                "follower": frac(values[(inst.start, k)][1]),
            }
            for k in range(1, horizon + 1)
        }
        payload = {
            "kind": "nidg",
            "horizon": horizon,
            "start": inst.state_label(inst.start),
            "start_values": start_values,
            "leader_strategy": {
                inst.state_label(s): {
                    inst.action_label(s, a): frac(p) for a, p in dist.items()
                }
                for s, dist in sorted(profile.leader_table.items())
            },
        }
        lines = [f"horizon {horizon} values at {inst.state_label(inst.start)}:"]
        for k in range(1, horizon + 1):
            v = values[(inst.start, k)]
            lines.append(f"  k={k}: leader={v[0]} follower={v[1]}")
        emit(ctx, "\n".join(lines) + "\n", payload)


@cli.command()
@click.argument("instance", type=click.Path(exists=True))
@click.pass_context
@domain_errors
def traps(ctx, instance):
    """Detect the maximal safety trap with certificates."""
    grid, inst = load_instance(instance)
    trap_set = detect_safety_traps(inst)
    payload = {
        "members": sorted(inst.state_label(s) for s in trap_set.members),
        "certificates": {
            inst.state_label(s): {
                "no_goal_action": cert.no_goal_action,
                "closure_witnesses": [
                    {
                        "action": inst.action_label(s, a),
                        "successor": inst.state_label(t),
                    }
                    for a, t in cert.closure_witnesses
                ],
            }
            for s, cert in trap_set.certificates.items()
        },
    }
    emit(ctx, render_trap_report(inst, trap_set), payload)


@cli.command(name="train")
@click.argument("instance", type=click.Path(exists=True))
@click.option("--episodes", type=int, default=50000)
@click.option("--alpha", type=float, default=0.1)
@click.option("--gamma", type=float, default=0.99)
@click.option("--eps-start", type=float, default=1.0)
@click.option("--eps-end", type=float, default=0.05)
@click.option("--max-steps", type=int, default=None)
@click.option(
    "--out",
    type=click.Path(file_okay=False),
    default=".",
    help="Directory for leader.qt, follower.qt, curves.csv",
)
@click.pass_context
@domain_errors
def train_cmd(ctx, instance, episodes, alpha, gamma, eps_start, eps_end, max_steps, out):
    """Independent Q-learning for both roles; writes tables and curves."""
    grid, inst = load_instance(instance)
    cfg = TrainConfig(
        episodes=episodes,
        max_steps=max_steps,
        alpha=alpha,
        gamma=gamma,
        eps_start=eps_start,
        eps_end=eps_end,
        seed=ctx.obj["seed"],
    )
    leader_q, follower_q, curves = train(inst, cfg)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "leader.qt").write_text(serialize_leader_table(leader_q))
    (out_dir / "follower.qt").write_text(serialize_follower_table(follower_q))
    (out_dir / "curves.csv").write_text(curves_to_csv(curves))
    goals = sum(1 for p in curves[-1000:] if p.outcome.value == "goal")
    payload = {
        "episodes": episodes,
        "seed": cfg.seed,
        "out": str(out_dir),
        "final_1000_goal_fraction": goals / min(1000, len(curves)),
    }
    text = (
        f"trained {episodes} episodes (seed {cfg.seed}); "
        f"goal fraction over last 1000: {payload['final_1000_goal_fraction']:.3f}\n"
        f"wrote {out_dir}/leader.qt, follower.qt, curves.csv\n"
    )
    emit(ctx, text, payload)


def build_leader(kind: str, inst, table_path):
    if kind == "replanning":
        return leader_replanning_policy(inst)
    if kind == "informed":
        return fully_informed_leader(inst)
    if kind == "learned":
        if not table_path:
            raise IdgError("--leader learned needs --leader-table")
        return parse_leader_table(Path(table_path).read_text()).as_policy()
    raise IdgError(f"unknown leader kind {kind!r}")


def build_follower(kind: str, inst, table_path):
    if kind == "optimal":
        return follower_optimal_policy(inst)
    if kind == "always-obey":
        return always_obey_policy(inst)
    if kind == "learned":
        if not table_path:
            raise IdgError("--follower learned needs --follower-table")
        return parse_follower_table(Path(table_path).read_text()).as_policy()
    raise IdgError(f"unknown follower kind {kind!r}")


@cli.command(name="eval")
@click.argument("instance", type=click.Path(exists=True))
@click.option(
    "--leader",
    type=click.Choice(["replanning", "informed", "learned"]),
    default="replanning",
)
@click.option(
    "--follower",
    type=click.Choice(["optimal", "always-obey", "learned"]),
    default="optimal",
)
@click.option("--leader-table", type=click.Path(exists=True), default=None)
@click.option("--follower-table", type=click.Path(exists=True), default=None)
@click.option("--episodes", type=int, default=1000)
@click.option("--max-steps", type=int, default=None)
@click.pass_context
@domain_errors
def eval_cmd(ctx, instance, leader, follower, leader_table, follower_table, episodes, max_steps):
    """Greedy evaluation metrics for a (leader, follower) pairing."""
    grid, inst = load_instance(instance)
    metrics = evaluate(
        inst,
        build_leader(leader, inst, leader_table),
        build_follower(follower, inst, follower_table),
        episodes=episodes,
        max_steps=max_steps,
        seed=ctx.obj["seed"],
    )
    payload = {"leader": leader, "follower": follower, **metrics.to_dict()}
    lines = [f"{k}: {v}" for k, v in sorted(metrics.to_dict().items())]
    emit(ctx, "\n".join(lines) + "\n", payload)


@cli.command()
@click.option("--width", type=int, required=True)
@click.option("--height", type=int, required=True)
@click.option("--density", type=float, default=0.2)
@click.option("--require-safe-path/--no-require-safe-path", default=True)
@click.pass_context
@domain_errors
def gen(ctx, width, height, density, require_safe_path):
    """Generate a random instance document."""
    grid = generate_random(width, height, density, require_safe_path, ctx.obj["seed"])
    doc = serialize_instance(grid)
    payload = {"document": doc, "seed": ctx.obj["seed"]}
    emit(ctx, doc, payload)


def ascii_board(view: dict) -> str:
    rows = []
    goals = {(g["x"], g["y"]) for g in view["goals"]}
    pos = (view["position"]["x"], view["position"]["y"])
    start = (view["start"]["x"], view["start"]["y"])
    for y in range(view["height"]):
        row = ""
        for x in range(view["width"]):
            if (x, y) == pos:
                row += "P"
            elif (x, y) in goals:
                row += "G"
            elif (x, y) == start:
                row += "S"
            else:
                row += "."
        rows.append(row)
    return "\n".join(rows)


@cli.command()
@click.argument("instance", type=click.Path(exists=True))
@click.option(
    "--follower",
    type=click.Choice(["optimal", "always-obey"]),
    default="optimal",
)
@click.option("--feedback/--no-feedback", default=True)
@click.pass_context
@domain_errors
def play(ctx, instance, follower, feedback):
    """Interactive terminal session: you are the leader, the view is masked."""
    from .service import SessionCore, make_follower

    grid, inst = load_instance(instance)
    core = SessionCore(
        session_id="terminal",
        instance_id="local",
        grid=grid,
        instance=inst,
        follower=make_follower(follower, inst, None),
        follower_kind=follower,
        feedback=feedback,
        seed=ctx.obj["seed"],
    )
    click.echo("you are the leader; harmful tiles are hidden from you")
    while core.outcome is None:
        view = core.observation_view()
        click.echo(ascii_board(view))
        click.echo(f"moves: {', '.join(view['available'])} (or 'quit')")
        try:
            choice = click.prompt("move", type=str)
        except click.exceptions.Abort:
            break
        if choice == "quit":
            break
        if choice not in view["available"]:
            click.echo(f"unavailable; choose from {view['available']}")
            continue
        result = core.propose(choice)
        if result["decision"] == "disobey":
            reason = result["feedback"]["reason"] if result["feedback"] else "no reason given"
            click.echo(f"follower disobeyed ({reason})")
        else:
            click.echo("follower obeyed")
    if core.outcome is not None:
        click.echo(f"game over: {core.outcome.value} in {len(core.records)} turns")


@cli.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8642)
@domain_errors
def serve(host, port):
    """Run the HTTP session service."""
    from .service import serve as run_service

    click.echo(f"serving on http://{host}:{port}")
    run_service(host=host, port=port)


def main():
    cli(prog_name="idg")


if __name__ == "__main__":
    main()
