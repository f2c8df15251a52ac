"""Seeded multi-round simulation loop and result records.

One round: sample the scenario, turn each client's state into a quote
(capacity bounds, quality, min-cost curve under the active policy), allocate
workloads toward the gain target, quantize the winning schedules, place them
into the shared per-window pools next to the previous round's transfer chain,
and settle payments on what actually fit.  Output rows are plain dicts so the
CSV/JSONL writers stay trivial and byte-reproducible.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import (
    SELECTION_POLICIES,
    Policy,
    SelectionMetrics,
    realize_with_policy,
    schedule_with_policy,
    select_clients,
)
from .config import ExperimentConfig, config_hash
from .costs import ScheduleDecision
from .errors import GainShortfallError
from .market import ClientQuote, CostCurve, allocate_workloads, build_report
from .resource_pool import new_pool
from .rounds import cycle_length, plan_round
from .scenario import (
    global_label_distribution,
    make_scenario,
    spectral_efficiency,
    status_attributes,
    step_mobility,
)
from .sensing import qod
from .solver import (
    Budgets,
    OutcomeKind,
    SolveInput,
    mtv,
    mutv,
)

SUMMARY_COLUMNS = [
    "round",
    "gain",
    "app_payment",
    "payments_total",
    "costs_total",
    "server_profit",
    "client_profits_total",
    "welfare",
    "active_count",
    "t_delta_cells",
    "shortfall",
]

TIMELINE_COLUMNS = ["round", "client", "process", "start_cell", "end_cell", "b_cells", "f_cells"]

TRAJECTORY_COLUMNS = ["round", "id", "kind", "x", "y", "class"]


@dataclass
class RunRecord:
    """Everything one simulation produced, reproducible byte-for-byte."""

    config: dict
    config_hash: str
    seed: int
    summary_rows: list[dict] = field(default_factory=list)
    client_rows: list[dict] = field(default_factory=list)
    timeline_rows: list[dict] = field(default_factory=list)
    trajectory_rows: list[dict] = field(default_factory=list)
    audit_violations: list[str] = field(default_factory=list)
    cr_count: int = 0

    def summary_csv(self) -> str:
        return _csv_text(SUMMARY_COLUMNS, self.summary_rows)

    def timeline_csv(self) -> str:
        return _csv_text(TIMELINE_COLUMNS, self.timeline_rows)

    def trajectories_csv(self) -> str:
        return _csv_text(TRAJECTORY_COLUMNS, self.trajectory_rows)

    def clients_jsonl(self) -> str:
        return "".join(json.dumps(row, sort_keys=True) + "\n" for row in self.client_rows)

    def run_json(self) -> str:
        return json.dumps(
            {
                "config_hash": self.config_hash,
                "seed": self.seed,
                "rounds": len(self.summary_rows),
                "cr_count": self.cr_count,
                "audit_violations": self.audit_violations,
                "total_welfare": sum(r["welfare"] for r in self.summary_rows),
                "total_gain": sum(r["gain"] for r in self.summary_rows),
            },
            indent=2,
            sort_keys=True,
        )

    def output_texts(self) -> dict[str, str]:
        out = {
            "summary.csv": self.summary_csv(),
            "clients.jsonl": self.clients_jsonl(),
            "timeline.csv": self.timeline_csv(),
            "run.json": self.run_json(),
        }
        if self.trajectory_rows:
            out["trajectories.csv"] = self.trajectories_csv()
        return out

    def output_hashes(self) -> dict[str, str]:
        return {
            name: hashlib.sha256(text.encode()).hexdigest()
            for name, text in sorted(self.output_texts().items())
        }

    def write(self, outdir: str | Path) -> list[Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        written = []
        for name, text in self.output_texts().items():
            path = outdir / name
            path.write_text(text)
            written.append(path)
        return written

    @property
    def total_welfare(self) -> float:
        return sum(r["welfare"] for r in self.summary_rows)

    @property
    def total_gain(self) -> float:
        return sum(r["gain"] for r in self.summary_rows)


def _csv_text(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row[k]) for k in columns})
    return buf.getvalue()


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return int(value)
    return value


def validate_summary_rows(rows: list[dict]) -> list[str]:
    """Re-check the bookkeeping identities on loaded/emitted summary rows."""
    bad = []
    for row in rows:
        if abs(row["server_profit"] - (row["app_payment"] - row["payments_total"])) > 1e-6:
            bad.append(f"round{row['round']}:server_profit_identity")
        if (
            abs(
                row["client_profits_total"]
                - (row["payments_total"] - row["costs_total"])
            )
            > 1e-6
        ):
            bad.append(f"round{row['round']}:client_profit_identity")
    return bad


def load_summary_csv(text: str) -> list[dict]:
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        rows.append(
            {
                "round": int(raw["round"]),
                "gain": float(raw["gain"]),
                "app_payment": float(raw["app_payment"]),
                "payments_total": float(raw["payments_total"]),
                "costs_total": float(raw["costs_total"]),
                "server_profit": float(raw["server_profit"]),
                "client_profits_total": float(raw["client_profits_total"]),
                "welfare": float(raw["welfare"]),
                "active_count": int(raw["active_count"]),
                "t_delta_cells": int(raw["t_delta_cells"]),
                "shortfall": bool(int(raw["shortfall"])),
            }
        )
    return rows


@dataclass
class _ClientRound:
    """Working state for one client inside one round."""

    cid: str
    attrs: object
    quote: ClientQuote | None
    task: object
    budgets: Budgets
    n: int = 0
    decision: ScheduleDecision | None = None
    quantized: ScheduleDecision | None = None
    solve_budgets: Budgets | None = None
    note: str = ""


def _with_cons_cap(budgets: Budgets, cap: float) -> Budgets:
    return Budgets(
        budgets.time_cells,
        budgets.freq_cells,
        budgets.compute_cells,
        cycle_cells=budgets.cycle_cells,
        gen_freq_cells=budgets.gen_freq_cells,
        cons_freq_cells=cap,
    )


def _policy_solve(policy, n, at, task, prices, budgets, quanta, pipelined):
    """Policy solve with the spectrum split internalized.

    In pipelined mode a client's transfer chain shares its window with the
    client's sensing of the following round, so after the plain solve the
    transfers are re-solved with their bandwidth capped beside the sensing
    block.  When the capped chain cannot carry the workload, the uncapped
    schedule stands (the placement-time tightening loop still guards the
    actual grids).  Returns (outcome, budgets_used).
    """
    out = schedule_with_policy(policy, SolveInput(n, at, task, prices, budgets, quanta))
    if not pipelined or out.kind != OutcomeKind.OPTIMAL or out.decision is None:
        return out, budgets
    sensing_width = math.ceil(out.decision.gen.b_ws - 1e-9)
    if sensing_width <= 0:
        return out, budgets
    cap = max(1.0, budgets.freq_cells - sensing_width)
    if cap >= budgets.cons_bandwidth:
        return out, budgets
    capped = _with_cons_cap(budgets, cap)
    out2 = schedule_with_policy(policy, SolveInput(n, at, task, prices, capped, quanta))
    if out2.kind != OutcomeKind.OPTIMAL:
        return out, budgets
    return out2, capped


def _saturated_allocation(quotes, ceiling, max_active):
    """Gain-greedy fallback/MLPG allocation: load the strongest earners to
    capacity, partial-loading the last one to stay under the ceiling."""
    order = sorted(quotes, key=lambda q: (-q.gain_rate * q.mtv, q.client_id))
    load: dict[str, int] = {}
    gain = 0.0
    for q in order:
        if len(load) >= max_active:
            break
        if q.gain_rate <= 0 or q.mtv < 1:
            continue
        room = ceiling - gain
        n = min(q.mtv, int((room - 1e-9) // q.gain_rate)) if math.isfinite(ceiling) else q.mtv
        if n >= 1:
            load[q.client_id] = n
            gain += q.gain_rate * n
    return load


def run(config: ExperimentConfig) -> RunRecord:
    """Execute the configured simulation; deterministic in (config, seed)."""
    record = RunRecord(config=config.raw, config_hash=config_hash(config), seed=config.seed)
    sc = config.scenario
    policy = config.policy
    geometry = config.geometry()
    channel = config.channel()
    profile = config.profile()
    quanta = config.quanta()
    prices = config.prices()
    market = config.market
    t_cells, b_cells, f_cells = config.scaled_cells()

    state = make_scenario(
        seed=config.seed,
        n_clients=sc["n_clients"],
        n_targets=sc["n_targets"],
        n_classes=sc["n_classes"],
        area_m=sc["area_m"],
        max_speed=sc["max_speed_mps"],
    )
    step_seeds = np.random.SeedSequence(config.seed).generate_state(max(config.rounds, 1) + 1)
    client_ids = [f"c{i:03d}" for i in range(sc["n_clients"])]
    serial = config.mode == "serial"

    prev_cons: dict[str, ScheduleDecision] = {}
    prev_durations: list[int] = []
    cumulative_gain = 0.0
    windows_used = 0

    for r in range(1, config.rounds + 1):
        state = step_mobility(state, int(step_seeds[r - 1]), dt=t_cells * quanta.time_s)
        if config.output["trajectories"]:
            record.trajectory_rows += _trajectory_rows(state, client_ids, r)

        t_delta = t_cells if serial else cycle_length(prev_durations, t_cells)
        budgets = Budgets(float(t_cells), float(b_cells), float(f_cells), cycle_cells=float(t_delta))

        clients = _build_quotes(
            state, client_ids, config, geometry, channel, profile, quanta, prices, budgets,
            policy, {} if serial else prev_cons, not serial,
        )
        floor, ceiling = _round_targets(market, cumulative_gain)
        quotes = [c.quote for c in clients.values() if c.quote is not None]

        shortfall = False
        if policy in SELECTION_POLICIES:
            metrics = _selection_metrics(clients, budgets, quanta)
            k = min(market["max_active_clients"], len(quotes))
            chosen = set(select_clients(policy, quotes, metrics, k, prices=prices))
            quotes_in_play = [q for q in quotes if q.client_id in chosen]
        else:
            quotes_in_play = quotes

        if ceiling <= 0:  # cumulative target already met in earlier rounds
            workloads: dict[str, int] = {}
        elif policy == Policy.MLPG:
            workloads = _saturated_allocation(
                quotes_in_play, ceiling, market["max_active_clients"]
            )
        else:
            alloc_quotes = quotes_in_play
            if policy == Policy.WISCC and quotes_in_play:
                mean_rate = sum(q.gain_rate for q in quotes_in_play) / len(quotes_in_play)
                alloc_quotes = [
                    ClientQuote(q.client_id, q.qod, q.mtv, q.mutv, mean_rate, q.curve)
                    for q in quotes_in_play
                ]
            try:
                allocation, _ = allocate_workloads(
                    alloc_quotes,
                    prices,
                    floor,
                    ceiling - floor,
                    market["max_active_clients"],
                    market["alpha"],
                    market["beta"],
                )
                workloads = dict(allocation.workloads)
            except GainShortfallError:
                shortfall = True
                workloads = _saturated_allocation(
                    quotes_in_play, ceiling, market["max_active_clients"]
                )

        for cid, n in workloads.items():
            clients[cid].n = n

        _solve_and_quantize(clients, policy, prices, quanta, not serial)
        _place_round(
            record, clients, prev_cons, r, t_cells, b_cells, f_cells, policy, prices, quanta,
            budgets, serial,
        )
        windows_used = 2 * r if serial else r

        # settle on what actually fit
        active = {
            cid: c for cid, c in clients.items() if c.n > 0 and c.quantized is not None
        }
        by_id = {c.quote.client_id: c.quote for c in clients.values() if c.quote}
        report = build_report(
            by_id, {cid: c.n for cid, c in active.items()}, prices,
            market["alpha"], market["beta"],
        )
        realized_costs = {
            cid: c.quantized.cost(prices) for cid, c in active.items()
        }
        payments = dict(report.client_payments)
        if policy != Policy.MLPG:
            for cid in sorted(active):
                if payments.get(cid, 0.0) - realized_costs[cid] < -1e-9:
                    active[cid].note = "unprofitable after quantization"
                    active[cid].n = 0
            active = {cid: c for cid, c in active.items() if c.n > 0}
            report = build_report(
                by_id, {cid: c.n for cid, c in active.items()}, prices,
                market["alpha"], market["beta"],
            )
            realized_costs = {cid: c.quantized.cost(prices) for cid, c in active.items()}

        gain = report.gain
        if gain < floor - 1e-9:
            shortfall = True
        cumulative_gain += gain
        payments_total = sum(report.client_payments.values())
        costs_total = sum(realized_costs.values())
        profits_total = payments_total - costs_total
        server_profit = report.app_payment - payments_total
        welfare = market["alpha"] * server_profit + market["beta"] * profits_total
        record.summary_rows.append(
            {
                "round": r,
                "gain": gain,
                "app_payment": report.app_payment,
                "payments_total": payments_total,
                "costs_total": costs_total,
                "server_profit": server_profit,
                "client_profits_total": profits_total,
                "welfare": welfare,
                "active_count": len(active),
                "t_delta_cells": t_delta,
                "shortfall": shortfall,
            }
        )
        for cid in client_ids:
            c = clients[cid]
            row = {
                "round": r,
                "client": cid,
                "n": c.n,
                "qod": c.quote.qod if c.quote else 0.0,
                "gain_rate": c.quote.gain_rate if c.quote else 0.0,
                "payment": report.client_payments.get(cid, 0.0),
                "cost": realized_costs.get(cid, 0.0),
                "profit": report.client_payments.get(cid, 0.0) - realized_costs.get(cid, 0.0),
                "mtv": c.quote.mtv if c.quote else -1,
                "mutv": c.quote.mutv if c.quote else -1,
                "note": c.note,
            }
            record.client_rows.append(row)

        prev_cons = {cid: c.quantized for cid, c in active.items()}
        # the next window's cycle is this window's critical path: upcoming
        # transfer chains plus the sensing spans that just ran
        prev_durations = [int(d.consumption_time) for d in prev_cons.values()] + [
            int(d.gen.t_vs) for d in prev_cons.values()
        ]

    # trailing window for the last round's transfer chain
    if not serial and config.rounds >= 1:
        pools = {cid: new_pool(t_cells, b_cells, f_cells) for cid in prev_cons} or {
            client_ids[0]: new_pool(t_cells, b_cells, f_cells)
        }
        plan = plan_round(config.rounds + 1, t_cells, pools, prev_cons, {})
        record.timeline_rows += plan.timeline_rows()
        record.audit_violations += plan.audit_violations
        windows_used = config.rounds + 1
    record.cr_count = windows_used if config.rounds else 0

    bad = validate_summary_rows(record.summary_rows)
    if bad:
        record.audit_violations += bad
    return record


def _round_targets(market: dict, cumulative_gain: float) -> tuple[float, float]:
    floor = market["gain_floor"]
    ceiling = floor + market["gain_window"]
    if market["gain_target_mode"] == "cumulative":
        floor = max(0.0, floor - cumulative_gain)
        ceiling = ceiling - cumulative_gain
    return floor, ceiling


def _trajectory_rows(state, client_ids, r):
    rows = []
    for i, cid in enumerate(client_ids):
        rows.append(
            {
                "round": r, "id": cid, "kind": "client",
                "x": float(state.client_pos[i, 0]), "y": float(state.client_pos[i, 1]),
                "class": -1,
            }
        )
    for j in range(state.n_targets):
        rows.append(
            {
                "round": r, "id": f"t{j:03d}", "kind": "target",
                "x": float(state.target_pos[j, 0]), "y": float(state.target_pos[j, 1]),
                "class": int(state.target_class[j]),
            }
        )
    return rows


def _build_quotes(
    state, client_ids, config, geometry, channel, profile, quanta, prices, budgets, policy,
    prev_cons, pipelined,
) -> dict[str, _ClientRound]:
    """Quotes for every client: capacity bounds, quality, lazy cost curve.

    A client sharing its window with last round's transfer chain quotes with
    the sensing bandwidth already reduced by that chain's peak, so the market
    never allocates a workload the spectrum cannot host.
    """
    global_dist = global_label_distribution(state, geometry, profile.mode)
    clients: dict[str, _ClientRound] = {}
    for i, cid in enumerate(client_ids):
        at = status_attributes(state, i, geometry, channel, profile, quanta)
        dist = float(np.linalg.norm(state.client_pos[i] - state.server_pos))
        dist = max(dist, 1.0)
        eff_down = spectral_efficiency(
            dist, channel.tx_power_server_dbm, channel.sensitivity_wc_dbm, channel, quanta
        )
        eff_up = spectral_efficiency(
            dist, channel.tx_power_client_dbm, channel.sensitivity_wc_dbm, channel, quanta
        )
        task = config.task_for(eff_down, eff_up)
        my_budgets = budgets
        prev = prev_cons.get(cid)
        if prev is not None:
            peak = max(prev.comm_down.b, prev.comm_up.b)
            if peak > 0:
                my_budgets = Budgets(
                    budgets.time_cells,
                    budgets.freq_cells,
                    budgets.compute_cells,
                    cycle_cells=budgets.cycle_cells,
                    gen_freq_cells=max(0.0, budgets.freq_cells - peak),
                )
        cap = mtv(at, task, my_budgets, quanta)
        entry = _ClientRound(cid=cid, attrs=at, quote=None, task=task, budgets=my_budgets)
        clients[cid] = entry
        if cap < 1:
            entry.note = "no feasible workload"
            continue
        q = 0.0
        if at.label_dist is not None and global_dist is not None:
            q = max(0.0, qod(at.label_dist, global_dist))
        n_unc = mutv(at, task, prices, my_budgets, quanta)
        cap_i = int(min(cap, 10**7))

        def cost_fn(n, _at=at, _task=task, _budgets=my_budgets):
            out, _ = _policy_solve(policy, n, _at, _task, prices, _budgets, quanta, pipelined)
            if out.kind != OutcomeKind.OPTIMAL:
                return math.inf
            return out.cost

        entry.quote = ClientQuote(
            client_id=cid,
            qod=q,
            mtv=cap_i,
            mutv=int(n_unc) if math.isfinite(n_unc) else cap_i,
            gain_rate=config.market["gain_factor"] * q,
            curve=CostCurve(cost_fn, cap_i),
        )
    return clients


def _selection_metrics(clients, budgets, quanta) -> dict[str, SelectionMetrics]:
    quoted = [c for c in clients.values() if c.quote is not None]
    caps = sorted(c.quote.mtv for c in quoted)
    n_ref = max(1, caps[len(caps) // 2] if caps else 1)
    metrics = {}
    for c in quoted:
        at, task = c.attrs, c.task
        cell_bits = quanta.time_s * quanta.freq_hz
        comm = 0.0
        for bits, eff in ((task.d_down_bits, task.eff_down), (task.d_up_bits, task.eff_up)):
            if bits > 0:
                comm += bits / (eff * cell_bits * budgets.freq_cells) if eff > 0 else math.inf
        comp = (
            n_ref * task.cycles_per_sample
            / (quanta.compute_cycles_per_s * quanta.time_s * budgets.compute_cells)
        )
        rate = at.a + at.b * budgets.gen_bandwidth
        sense = n_ref / rate if rate > 0 else math.inf
        metrics[c.cid] = SelectionMetrics(
            comm_latency=comm,
            comp_latency=comp,
            sensing_latency=sense,
            sensed_targets=at.n_visual_targets + at.n_wireless_targets,
            peak_sample_rate=rate,
        )
    return metrics


def _solve_and_quantize(clients, policy, prices, quanta, pipelined) -> None:
    for cid in sorted(clients):
        c = clients[cid]
        if c.n <= 0:
            continue
        out, used = _policy_solve(
            policy, c.n, c.attrs, c.task, prices, c.budgets, quanta, pipelined
        )
        if out.kind != OutcomeKind.OPTIMAL:
            c.note = "workload infeasible at solve time"
            c.n = 0
            continue
        quantized = realize_with_policy(
            policy, SolveInput(c.n, c.attrs, c.task, prices, used, quanta)
        )
        if quantized is None and used is not c.budgets:
            # the spectrum-split cap is a heuristic; retry at full grid width
            used = c.budgets
            quantized = realize_with_policy(
                policy, SolveInput(c.n, c.attrs, c.task, prices, used, quanta)
            )
        if quantized is None:
            c.note = "no integral schedule fits the window"
            c.n = 0
            continue
        c.decision = out.decision
        c.solve_budgets = used
        c.quantized = quantized


def _place_round(
    record, clients, prev_cons, r, t_cells, b_cells, f_cells, policy, prices, quanta,
    budgets, serial,
) -> object:
    """Reserve this round's sensing next to the previous chain (pipelined) or
    in separate windows (serial); re-solve sensing once on spectrum clashes."""
    involved = sorted(set(prev_cons) | {cid for cid, c in clients.items() if c.n > 0})
    pools = {cid: new_pool(t_cells, b_cells, f_cells) for cid in involved}
    generation = {cid: clients[cid].quantized for cid, c in clients.items() if c.n > 0}

    def resolve(cid, free_bandwidth):
        # re-solve against the real grids: the heuristic transfer cap is
        # dropped, only the observed sensing bandwidth limit applies
        c = clients[cid]
        tightened = Budgets(
            c.budgets.time_cells,
            c.budgets.freq_cells,
            c.budgets.compute_cells,
            cycle_cells=c.budgets.cycle_cells,
            gen_freq_cells=float(free_bandwidth),
        )
        out = schedule_with_policy(
            policy, SolveInput(c.n, c.attrs, c.task, prices, tightened, quanta)
        )
        if out.kind != OutcomeKind.OPTIMAL:
            return None
        q = realize_with_policy(
            policy, SolveInput(c.n, c.attrs, c.task, prices, tightened, quanta)
        )
        if q is not None:
            c.decision = out.decision
            c.quantized = q
            c.note = "sensing re-solved after spectrum tightening"
        return q

    t_delta = int(budgets.t_budget)
    if serial:
        gen_plan = plan_round(
            r, t_cells, pools, {}, generation, resolve_tightened=resolve, t_delta=t_delta
        )
        cons_pools = {cid: new_pool(t_cells, b_cells, f_cells) for cid in involved}
        cons = {cid: c.quantized for cid, c in clients.items() if c.n > 0 and c.quantized}
        cons_plan = plan_round(r, t_cells, cons_pools, cons, {}, t_delta=t_delta)
        plans = [gen_plan, cons_plan]
    else:
        plans = [
            plan_round(
                r, t_cells, pools, prev_cons, generation,
                resolve_tightened=resolve, t_delta=t_delta,
            )
        ]

    for plan in plans:
        record.timeline_rows += plan.timeline_rows()
        record.audit_violations += plan.audit_violations
        for cid, reason in plan.dropped.items():
            if cid in clients and clients[cid].n > 0:
                clients[cid].note = reason
                clients[cid].n = 0
                clients[cid].quantized = None
    return plans[0]


def sweep(config: ExperimentConfig, axis: str, values: list) -> tuple[list[RunRecord], list[dict]]:
    """One run per value of a dotted config path, shared seed; returns the
    records plus merged per-round summary rows keyed by the swept value."""
    from .config import load_config

    records = []
    merged = []
    for value in values:
        override: dict = {}
        cursor = override
        parts = axis.split(".")
        for part in parts[:-1]:
            cursor[part] = {}
            cursor = cursor[part]
        cursor[parts[-1]] = value
        cfg = load_config(_merge_raw(config.raw, override))
        rec = run(cfg)
        records.append(rec)
        for row in rec.summary_rows:
            merged.append({"swept_value": value, **row})
    return records, merged


def _merge_raw(base: dict, override: dict) -> dict:
    import copy

    merged = copy.deepcopy(base)
    stack = [(merged, override)]
    while stack:
        dst, src = stack.pop()
        for k, v in src.items():
            if isinstance(v, dict) and isinstance(dst.get(k), dict):
                stack.append((dst[k], v))
            else:
                dst[k] = v
    return merged
