"""Process-separated Bell runs over a line-delimited wire protocol.

A run involves three roles: a source/coordinator and two measurement wings.
Per trial the source draws one hidden-variable value, sends the identical
serialization to both wings, and collects one outcome from each.  A wing
chooses its setting locally, after the hidden variable arrives, and replies
with (sign, local setting).  The wire schema has no field that could carry
a remote wing's setting toward a wing, so no-signaling holds by
construction; the audit makes that checkable from the log alone.

Wire format: one JSON object per line with exactly the fields
``type, v, trial, wing, payload`` and protocol version v=1 everywhere.
Message types are hello, lambda, outcome, done, error.  Real-valued hidden
variables travel as decimal text with 17 significant digits (exact
round-trip); instruction sets as 3-character strings.

The source's log records every message with an ISO-8601 timestamp and a
direction marker (``>`` sent, ``<`` received).  Merged statistics are
computed from the log after the run, the way a real experiment would, and
reproduce the in-process estimators bit for bit under the same seed
schedule.
"""

from __future__ import annotations

import json
import socket
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import rng
from .bell_stats import CorrelationEstimate, _estimate_from_tally
from .hv_models import LhvModel, Setting

PROTOCOL_VERSION = 1
WINGS = ("A", "B")

_FIELDS = ("type", "v", "trial", "wing", "payload")

# payload key sets per (direction, type); direction is the source's view
_SCHEMA_SENT = {
    "hello": {"role", "model", "b_convention", "n_trials"},
    "lambda": {"lambda"},
    "done": set(),
}
_SCHEMA_RECEIVED = {
    "hello": {"role"},
    "outcome": {"sign", "setting"},
    "error": {"message"},
}


class WireError(ValueError):
    """Malformed or out-of-protocol message."""


@dataclass(frozen=True)
class WireMessage:
    type: str
    trial: int
    wing: str
    payload: dict
    v: int = PROTOCOL_VERSION

    def to_line(self) -> str:
        obj = {"type": self.type, "v": self.v, "trial": self.trial,
               "wing": self.wing, "payload": self.payload}
        return json.dumps(obj, separators=(",", ":"))

    @staticmethod
    def from_line(line: str) -> "WireMessage":
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise WireError(f"not JSON: {line!r}") from exc
        if not isinstance(obj, dict) or set(obj) != set(_FIELDS):
            raise WireError(f"message fields must be exactly {_FIELDS}")
        if not isinstance(obj["payload"], dict):
            raise WireError("payload must be an object")
        return WireMessage(obj["type"], int(obj["trial"]), str(obj["wing"]),
                           obj["payload"], int(obj["v"]))


@dataclass(frozen=True)
class LogEntry:
    timestamp: str
    direction: str  # ">" sent by source, "<" received by source
    message: WireMessage


@dataclass
class RunLog:
    meta: dict
    entries: list[LogEntry] = field(default_factory=list)
    incomplete: bool = False

    def append(self, direction: str, message: WireMessage):
        ts = datetime.now(timezone.utc).isoformat(timespec="microseconds")
        self.entries.append(LogEntry(ts, direction, message))

    def write(self, path):
        lines = [f"# {k}={v}" for k, v in self.meta.items()]
        lines.append(f"# incomplete={str(self.incomplete).lower()}")
        lines.extend(f"{e.timestamp} {e.direction} {e.message.to_line()}" for e in self.entries)
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @staticmethod
    def read(path) -> "RunLog":
        meta: dict = {}
        entries: list[LogEntry] = []
        incomplete = False
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            if not raw.strip():
                continue
            if raw.startswith("#"):
                key, _, value = raw[1:].strip().partition("=")
                if key == "incomplete":
                    incomplete = value == "true"
                else:
                    meta[key] = value
                continue
            ts, direction, line = raw.split(" ", 2)
            entries.append(LogEntry(ts, direction, WireMessage.from_line(line)))
        return RunLog(meta, entries, incomplete)


# -- setting policies ---------------------------------------------------------

class FixedPolicy:
    """The wing always measures at one setting."""

    def __init__(self, setting: Setting):
        self.setting_value = setting

    def setting(self, trial: int) -> Setting:
        return self.setting_value

    def describe(self) -> str:
        return f"fixed:{self.setting_value.text}"


class RandomPolicy:
    """Per-trial uniform draw from a choice list, seeded wing-locally."""

    def __init__(self, choices, seed: int):
        self.choices = tuple(choices)
        if not self.choices:
            raise ValueError("need at least one choice")
        self.seed = seed

    def setting(self, trial: int) -> Setting:
        u = rng.uniform(self.seed + trial)
        return self.choices[min(int(u * len(self.choices)), len(self.choices) - 1)]

    def describe(self) -> str:
        return f"random:{','.join(c.text for c in self.choices)}:seed={self.seed}"


# -- message constructors (shared by the socket and in-process paths) ---------

def _hello_msg(wing: str, model: LhvModel, n_trials: int) -> WireMessage:
    return WireMessage("hello", 0, wing, {
        "role": "source", "model": model.name,
        "b_convention": model.b_convention, "n_trials": n_trials,
    })


def _lambda_msg(wing: str, trial: int, lam_text: str) -> WireMessage:
    return WireMessage("lambda", trial, wing, {"lambda": lam_text})


def _outcome_msg(wing: str, trial: int, sign: int, setting: Setting) -> WireMessage:
    return WireMessage("outcome", trial, wing, {"sign": int(sign), "setting": setting.text})


def _wing_outcome(model: LhvModel, wing: str, lam, setting: Setting) -> int:
    if wing == "A":
        return model.outcome_a(lam, setting)
    return model.outcome_b(lam, setting)


# -- wing ----------------------------------------------------------------------

def wing_serve(
    wing_id: str,
    model: LhvModel,
    policy,
    host: str = "127.0.0.1",
    port: int = 0,
    quit_after: int | None = None,
    announce=None,
) -> None:
    """Serve one run: answer lambda messages with outcomes until done.

    Binds host:port (port 0 picks a free one) and reports the bound
    endpoint through ``announce`` before accepting.  ``quit_after`` drops
    the connection abruptly after that many outcomes, for crash testing.
    """
    if wing_id not in WINGS:
        raise ValueError(f"wing_id must be one of {WINGS}")
    srv = socket.create_server((host, port))
    bound = srv.getsockname()
    if announce is not None:
        announce(f"WING {wing_id} LISTENING {bound[0]} {bound[1]}")
    conn, _ = srv.accept()
    served = 0
    try:
        rfile = conn.makefile("r", encoding="utf-8", newline="\n")
        wfile = conn.makefile("w", encoding="utf-8", newline="\n")

        def send(msg: WireMessage):
            wfile.write(msg.to_line() + "\n")
            wfile.flush()

        for line in rfile:
            try:
                msg = WireMessage.from_line(line.rstrip("\n"))
            except WireError as exc:
                send(WireMessage("error", 0, wing_id, {"message": str(exc)}))
                continue
            if msg.v != PROTOCOL_VERSION:
                send(WireMessage("error", msg.trial, wing_id,
                                 {"message": f"protocol version {msg.v} refused"}))
                break
            if msg.type == "hello":
                if msg.payload.get("model") != model.name or \
                        msg.payload.get("b_convention") != model.b_convention:
                    send(WireMessage("error", 0, wing_id,
                                     {"message": "model/convention mismatch refused"}))
                    break
                send(WireMessage("hello", 0, wing_id, {"role": "wing"}))
            elif msg.type == "lambda":
                lam = model.lambda_from_text(msg.payload["lambda"])
                setting = policy.setting(msg.trial)
                sign = _wing_outcome(model, wing_id, lam, setting)
                send(_outcome_msg(wing_id, msg.trial, sign, setting))
                served += 1
                if quit_after is not None and served >= quit_after:
                    conn.shutdown(socket.SHUT_RDWR)  # simulated crash
                    break
            elif msg.type == "done":
                break
            else:
                send(WireMessage("error", msg.trial, wing_id,
                                 {"message": f"unknown message type {msg.type!r}"}))
    finally:
        conn.close()
        srv.close()


# -- source --------------------------------------------------------------------

class _WingLink:
    def __init__(self, wing: str, endpoint: tuple[str, int]):
        self.wing = wing
        self.sock = socket.create_connection(endpoint, timeout=30)
        self.rfile = self.sock.makefile("r", encoding="utf-8", newline="\n")
        self.wfile = self.sock.makefile("w", encoding="utf-8", newline="\n")

    def send(self, msg: WireMessage):
        self.wfile.write(msg.to_line() + "\n")
        self.wfile.flush()

    def recv(self) -> WireMessage:
        line = self.rfile.readline()
        if not line:
            raise ConnectionError(f"wing {self.wing} disconnected")
        return WireMessage.from_line(line.rstrip("\n"))

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass


def _run_meta(model: LhvModel, n_trials: int, seed: int) -> dict:
    return {
        "v": PROTOCOL_VERSION,
        "model": model.name,
        "b_convention": model.b_convention,
        "n_trials": n_trials,
        "seed": seed,
    }


def source_run(
    model: LhvModel,
    n_trials: int,
    seed: int,
    endpoint_a: tuple[str, int],
    endpoint_b: tuple[str, int],
) -> RunLog:
    """Coordinate one distributed run and return its message log.

    Trial t's hidden variable comes from the stream of seed + t, the same
    schedule the in-process estimators use.  Trials run in lockstep: both
    outcomes of trial t are logged before trial t+1 starts.  A wing failure
    aborts the run and flags the log incomplete; the completed prefix is
    still auditable and mergeable.
    """
    log = RunLog(_run_meta(model, n_trials, seed))
    links = {}
    try:
        links = {"A": _WingLink("A", endpoint_a), "B": _WingLink("B", endpoint_b)}
        for wing, link in links.items():
            hello = _hello_msg(wing, model, n_trials)
            link.send(hello)
            log.append(">", hello)
        for wing, link in links.items():
            ack = link.recv()
            log.append("<", ack)
            if ack.type != "hello" or ack.v != PROTOCOL_VERSION:
                raise ConnectionError(f"wing {wing} refused handshake: {ack.to_line()}")
        for t in range(n_trials):
            lam = model.sample_lambda(seed + t)
            text = model.lambda_text(lam)
            for wing, link in links.items():
                msg = _lambda_msg(wing, t, text)
                link.send(msg)
                log.append(">", msg)
            for wing, link in links.items():
                reply = link.recv()
                log.append("<", reply)
                if reply.type == "error":
                    raise ConnectionError(f"wing {wing} error: {reply.payload.get('message')}")
                if reply.type != "outcome" or reply.trial != t:
                    raise ConnectionError(f"wing {wing} broke lockstep: {reply.to_line()}")
        for wing, link in links.items():
            msg = WireMessage("done", n_trials, wing, {})
            link.send(msg)
            log.append(">", msg)
    except (ConnectionError, OSError, WireError):
        log.incomplete = True
    finally:
        for link in links.values():
            link.close()
    return log


def simulate_run(model: LhvModel, policy_a, policy_b, n_trials: int, seed: int) -> RunLog:
    """In-process twin of source_run + two wings, no sockets.

    Messages are built by the same constructors and the same seed schedule,
    so the log merges to results bit-identical to a distributed run with
    the same configuration.
    """
    log = RunLog(_run_meta(model, n_trials, seed))
    for wing in WINGS:
        log.append(">", _hello_msg(wing, model, n_trials))
    for wing in WINGS:
        log.append("<", WireMessage("hello", 0, wing, {"role": "wing"}))
    policies = {"A": policy_a, "B": policy_b}
    for t in range(n_trials):
        lam = model.sample_lambda(seed + t)
        text = model.lambda_text(lam)
        for wing in WINGS:
            log.append(">", _lambda_msg(wing, t, text))
        for wing in WINGS:
            lam_back = model.lambda_from_text(text)
            setting = policies[wing].setting(t)
            sign = _wing_outcome(model, wing, lam_back, setting)
            log.append("<", _outcome_msg(wing, t, sign, setting))
    for wing in WINGS:
        log.append(">", WireMessage("done", n_trials, wing, {}))
    return log


# -- audit -----------------------------------------------------------------------

AUDIT_HEADER = (
    "no-signaling audit: verifies from message content alone that the run "
    "needed no channel carrying a remote setting: the wire schema admits no "
    "such field, identical hidden-variable payloads went to both wings, and "
    "outcomes preceded any cross-wing aggregation. The audit does not "
    "examine timing side channels, and it certifies this run's messages "
    "only, not the impossibility of other channels."
)


@dataclass(frozen=True)
class Violation:
    index: int  # entry index in the log
    code: str
    detail: str


@dataclass(frozen=True)
class AuditReport:
    ok: bool
    violations: tuple[Violation, ...]
    n_trials_seen: int
    incomplete: bool
    header: str = AUDIT_HEADER

    def text(self) -> str:
        lines = [self.header, ""]
        lines.append(f"trials seen: {self.n_trials_seen}")
        lines.append(f"log complete: {str(not self.incomplete).lower()}")
        if self.ok:
            lines.append("violations: none")
        else:
            lines.append(f"violations: {len(self.violations)}")
            for v in self.violations:
                lines.append(f"  entry {v.index}: [{v.code}] {v.detail}")
        return "\n".join(lines) + "\n"


def _payload_leaves(payload) -> list:
    out = []
    stack = [payload]
    while stack:
        node = stack.pop()
        if isinstance(node, dict):
            stack.extend(node.values())
        elif isinstance(node, (list, tuple)):
            stack.extend(node)
        else:
            out.append(node)
    return out


def audit_log(log: RunLog) -> AuditReport:
    """Check a run log for any sign of cross-wing setting flow.

    Three layers: (1) schema, every message has exactly the protocol fields
    and the payload keys its (direction, type) allows; (2) the genetic
    hypothesis, identical lambda text to both wings per trial, dense trial
    ids, outcomes before the next trial's lambdas; (3) content, no payload
    value delivered to a wing equals a setting the other wing reported.
    """
    violations: list[Violation] = []
    lam_text: dict[int, dict[str, tuple[int, str]]] = {}
    outcome_seen: dict[int, set[str]] = {}
    settings_used: dict[str, set[str]] = {"A": set(), "B": set()}
    max_lambda_trial = {"A": -1, "B": -1}
    n_trials_seen = 0

    for idx, entry in enumerate(log.entries):
        msg = entry.message
        if msg.v != PROTOCOL_VERSION:
            violations.append(Violation(idx, "schema", f"protocol version {msg.v}"))
        if msg.wing not in WINGS:
            violations.append(Violation(idx, "schema", f"unknown wing {msg.wing!r}"))
            continue
        schema = _SCHEMA_SENT if entry.direction == ">" else _SCHEMA_RECEIVED
        if msg.type not in schema:
            violations.append(Violation(
                idx, "flow", f"{msg.type!r} message may not travel direction {entry.direction!r}"))
            continue
        expected = schema[msg.type]
        if set(msg.payload) != expected:
            violations.append(Violation(
                idx, "schema",
                f"{msg.type} payload keys {sorted(msg.payload)} != {sorted(expected)}"))
            continue
        if entry.direction == "<" and msg.type == "outcome":
            if msg.payload["sign"] not in (1, -1):
                violations.append(Violation(idx, "schema", f"sign {msg.payload['sign']!r}"))
            settings_used[msg.wing].add(str(msg.payload["setting"]))
            outcome_seen.setdefault(msg.trial, set()).add(msg.wing)
        if entry.direction == ">" and msg.type == "lambda":
            t = msg.trial
            if t != max_lambda_trial[msg.wing] + 1:
                violations.append(Violation(
                    idx, "trial_order",
                    f"wing {msg.wing} lambda trial {t} after {max_lambda_trial[msg.wing]}"))
            max_lambda_trial[msg.wing] = max(max_lambda_trial[msg.wing], t)
            lam_text.setdefault(t, {})[msg.wing] = (idx, msg.payload["lambda"])
            if t > 0:
                prev = outcome_seen.get(t - 1, set())
                if prev != {"A", "B"}:
                    violations.append(Violation(
                        idx, "lockstep",
                        f"trial {t} lambda before both outcomes of trial {t - 1}"))
            n_trials_seen = max(n_trials_seen, t + 1)

    for t, per_wing in sorted(lam_text.items()):
        if set(per_wing) == {"A", "B"}:
            (ia, ta), (ib, tb) = per_wing["A"], per_wing["B"]
            if ta != tb:
                violations.append(Violation(
                    max(ia, ib), "lambda_mismatch",
                    f"trial {t}: wings got different hidden variables"))

    # content scan: wing-bound payload values vs the other wing's settings
    for idx, entry in enumerate(log.entries):
        if entry.direction != ">":
            continue
        other = "B" if entry.message.wing == "A" else "A"
        remote = settings_used[other]
        for leaf in _payload_leaves(entry.message.payload):
            if isinstance(leaf, str) and leaf in remote:
                violations.append(Violation(
                    idx, "content",
                    f"payload value {leaf!r} equals a wing-{other} setting"))

    violations.sort(key=lambda v: v.index)
    return AuditReport(not violations, tuple(violations), n_trials_seen, log.incomplete)


# -- merged statistics -------------------------------------------------------------

@dataclass(frozen=True)
class MergedCell:
    setting_a: Setting
    setting_b: Setting
    estimate: CorrelationEstimate
    p_agree: float
    partial: bool


MERGE_CSV_HEADER = "setting_a,setting_b,mean,stderr,n,exact,p_agree"


def merge_statistics(log: RunLog) -> list[MergedCell]:
    """Group completed trials by setting pair and compute E per cell.

    Uses the same integer tallies as the in-process estimators, so for a
    fixed seed schedule the distributed and in-process results are
    identical, not merely statistically compatible.  Trials missing an
    outcome (an incomplete run's tail) are skipped and the cells flagged
    partial.
    """
    outcomes: dict[int, dict[str, tuple[int, str]]] = {}
    for entry in log.entries:
        msg = entry.message
        if entry.direction == "<" and msg.type == "outcome":
            outcomes.setdefault(msg.trial, {})[msg.wing] = (
                int(msg.payload["sign"]), str(msg.payload["setting"]))
    partial = log.incomplete
    cells: dict[tuple[str, str], list[int]] = {}
    agrees: dict[tuple[str, str], int] = {}
    for t in sorted(outcomes):
        per_wing = outcomes[t]
        if set(per_wing) != {"A", "B"}:
            partial = True
            continue
        (sa, ta), (sb, tb) = per_wing["A"], per_wing["B"]
        key = (ta, tb)
        cells.setdefault(key, []).append(sa * sb)
        agrees[key] = agrees.get(key, 0) + (1 if sa == sb else 0)
    out = []
    for (ta, tb), prods in sorted(cells.items()):
        n = len(prods)
        est = _estimate_from_tally(sum(prods), n)
        out.append(MergedCell(Setting.from_text(ta), Setting.from_text(tb),
                              est, agrees[(ta, tb)] / n, partial))
    return out


def merge_csv_rows(cells: list[MergedCell]) -> list[str]:
    from .util import fmt17

    rows = []
    for c in cells:
        stderr = "" if c.estimate.stderr is None else fmt17(c.estimate.stderr)
        rows.append(",".join([
            c.setting_a.text, c.setting_b.text, fmt17(c.estimate.mean), stderr,
            str(c.estimate.n_trials), "false", fmt17(c.p_agree),
        ]))
    return rows
