"""Scripted multi-party runs over file-passed envelopes.

A scenario script is line-oriented text: a fixture preamble of response
policy rules, then ordered steps `actor<TAB>action<TAB>args...`. The
runner executes registry setup, key generation, enrollments, and
comparison invocations, writing every message as an envelope file and
reading it back on the receiving side, so a finished run leaves a
complete, inspectable transcript on disk.

Verdicts come from a static policy table: a responder maps (its role,
the asked predicate, the matched payload, and optionally an upstream
verdict it chained on) to a fixed verdict string. Raw payloads never
pass through to the wire.

Checks declared in the script (knowledge boundaries as received-message
greps, expected verdicts) are evaluated after the steps; the run passes
only when every step and every check does.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import messages
from .authority import EntityRegistry
from .groups import GroupBackend
from .participant import (
    ParticipantKey,
    RecordDatabase,
    ScanResult,
    begin_enrollment,
    build_query,
    complete_enrollment,
    keygen,
    scan_for_match,
)

__all__ = [
    "NO_RECORD_VERDICT",
    "CANNOT_ANSWER_VERDICT",
    "ScenarioError",
    "PolicyRule",
    "ScenarioStep",
    "CheckSpec",
    "ScenarioScript",
    "apply_response_policy",
    "parse_script",
    "load_script",
    "TranscriptEntry",
    "RespondRecord",
    "CheckResult",
    "ScenarioRun",
    "run_scenario",
]

NO_RECORD_VERDICT = "no record"
CANNOT_ANSWER_VERDICT = "cannot answer"

AUTHORITY_ROLE = "ted"


class ScenarioError(Exception):
    """A script could not be parsed or a step could not be executed."""


@dataclass(frozen=True)
class PolicyRule:
    """One row of the static response policy; `*` fields match anything."""

    role: str
    predicate: str
    payload: str
    upstream: str
    verdict: str


@dataclass(frozen=True)
class ScenarioStep:
    actor: str
    action: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class CheckSpec:
    """`check received <actor> forbids <text>` or `expect verdict <actor> <tag> <text>`."""

    kind: str
    actor: str
    arg: str
    text: str


@dataclass
class ScenarioScript:
    policy: list[PolicyRule] = field(default_factory=list)
    steps: list[ScenarioStep] = field(default_factory=list)
    checks: list[CheckSpec] = field(default_factory=list)


def apply_response_policy(
    policy: list[PolicyRule],
    role: str,
    predicate: str,
    payload: Optional[str],
    upstream: Optional[str] = None,
) -> str:
    """Map a matched payload and the asked predicate to a verdict.

    A missing payload (no record matched) short-circuits to the standing
    "no record" verdict; a predicate no rule covers yields "cannot
    answer". First matching rule wins.
    """
    if payload is None:
        return NO_RECORD_VERDICT
    for rule in policy:
        if rule.role not in ("*", role):
            continue
        if rule.predicate not in ("*", predicate):
            continue
        if rule.payload not in ("*", payload):
            continue
        if rule.upstream != "*" and rule.upstream != (upstream or ""):
            continue
        return rule.verdict
    return CANNOT_ANSWER_VERDICT


def parse_script(text: str) -> ScenarioScript:
    script = ScenarioScript()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        head = fields[0]
        try:
            if head == "policy":
                if len(fields) != 6:
                    raise ScenarioError("policy rules take exactly 5 fields")
                script.policy.append(PolicyRule(*fields[1:6]))
            elif head == "check":
                if len(fields) != 5 or fields[1] != "received" or fields[3] != "forbids":
                    raise ScenarioError(
                        "check lines look like: check\treceived\t<actor>\tforbids\t<text>"
                    )
                script.checks.append(CheckSpec("received-forbids", fields[2], "", fields[4]))
            elif head == "expect":
                if len(fields) != 5 or fields[1] != "verdict":
                    raise ScenarioError(
                        "expect lines look like: expect\tverdict\t<actor>\t<tag>\t<text>"
                    )
                script.checks.append(CheckSpec("verdict", fields[2], fields[3], fields[4]))
            else:
                if len(fields) < 2:
                    raise ScenarioError("steps need at least an actor and an action")
                script.steps.append(ScenarioStep(head, fields[1], tuple(fields[2:])))
        except ScenarioError as exc:
            raise ScenarioError(f"line {lineno}: {exc}") from None
    return script


def load_script(path: str | Path) -> ScenarioScript:
    return parse_script(Path(path).read_text(encoding="utf-8"))


# -- runner -------------------------------------------------------------------


@dataclass(frozen=True)
class TranscriptEntry:
    seq: int
    sender: str
    recipient: str
    envelope: messages.MessageEnvelope
    filename: str
    text: str


@dataclass(frozen=True)
class RespondRecord:
    """Runner-side record of one respond step (test oracle material)."""

    tag: str
    responder: str
    matched_slot: Optional[int]
    duplicate: bool
    matched_payload: Optional[str]
    verdict: str


@dataclass(frozen=True)
class CheckResult:
    description: str
    passed: bool
    detail: str = ""


@dataclass
class _Actor:
    name: str
    key: ParticipantKey
    db: RecordDatabase
    directory: dict[str, int] = field(default_factory=dict)
    scans: dict[str, tuple[ScanResult, Optional[str]]] = field(default_factory=dict)
    received_verdicts: dict[str, str] = field(default_factory=dict)


@dataclass
class _PendingQuery:
    tag: str
    submitter: str
    responder: str
    query_id: str
    envelope: messages.MessageEnvelope


class ScenarioRun:
    """Everything a finished run leaves behind, plus the pass/fail result."""

    def __init__(self, backend: GroupBackend, workdir: Path):
        self.backend = backend
        self.workdir = workdir
        self.transcript: list[TranscriptEntry] = []
        self.responses: list[RespondRecord] = []
        self.checks: list[CheckResult] = []
        self.steps_run = 0

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def received_texts(self, actor: str) -> list[str]:
        return [e.text for e in self.transcript if e.recipient == actor]

    def report_text(self, knowledge: dict[str, dict[str, str]]) -> str:
        lines = [
            "scenario report",
            f"backend: {self.backend.params_line()}",
            f"steps: {self.steps_run}",
            f"messages: {len(self.transcript)}",
            "knowledge:",
        ]
        for actor in sorted(knowledge):
            lines.append(f"  {actor}:")
            for tag, verdict in knowledge[actor].items():
                lines.append(f"    {tag} -> {verdict}")
        lines.append("checks:")
        for check in self.checks:
            status = "PASS" if check.passed else "FAIL"
            suffix = f" ({check.detail})" if check.detail else ""
            lines.append(f"  {status} {check.description}{suffix}")
        lines.append(f"result: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


class _Runner:
    def __init__(self, script: ScenarioScript, backend: GroupBackend,
                 workdir: Path, rng: random.Random):
        self.script = script
        self.backend = backend
        self.rng = rng
        self.workdir = Path(workdir)
        self.transcript_dir = self.workdir / "transcript"
        self.transcript_dir.mkdir(parents=True, exist_ok=True)
        self.registry = EntityRegistry(backend)
        self.actors: dict[str, _Actor] = {}
        self.queries: dict[str, _PendingQuery] = {}
        self.run = ScenarioRun(backend, self.workdir)
        self._seq = 0

    # -- message passing ----------------------------------------------------

    def send(self, sender: str, recipient: str,
             envelope: messages.MessageEnvelope) -> messages.MessageEnvelope:
        """Write the envelope file, then read it back as the recipient."""
        self._seq += 1
        filename = f"{self._seq:04d}-{envelope.kind}.json"
        path = self.transcript_dir / filename
        path.write_text(messages.envelope_to_json(envelope), encoding="utf-8")
        text = path.read_text(encoding="utf-8")
        received = messages.envelope_from_json(text)
        self.run.transcript.append(
            TranscriptEntry(self._seq, sender, recipient, received, filename, text)
        )
        return received

    # -- step execution -------------------------------------------------------

    def execute(self) -> ScenarioRun:
        for idx, step in enumerate(self.script.steps, start=1):
            try:
                self._dispatch(step)
            except Exception as exc:
                raise ScenarioError(
                    f"step {idx} ({step.actor} {step.action}): {exc}"
                ) from exc
            self.run.steps_run += 1
        self._evaluate_checks()
        knowledge = {
            name: dict(actor.received_verdicts) for name, actor in self.actors.items()
        }
        report = self.run.report_text(knowledge)
        (self.workdir / "report.txt").write_text(report, encoding="utf-8")
        return self.run

    def _dispatch(self, step: ScenarioStep) -> None:
        handler = getattr(self, "_step_" + step.action.replace("-", "_"), None)
        if handler is None:
            raise ScenarioError(f"unknown action {step.action!r}")
        handler(step.actor, *step.args)

    def _actor(self, name: str) -> _Actor:
        if name not in self.actors:
            raise ScenarioError(f"actor {name!r} has no key yet (missing keygen step)")
        return self.actors[name]

    def _step_register(self, actor: str, label: str) -> None:
        if actor != AUTHORITY_ROLE:
            raise ScenarioError("only the authority registers entities")
        self.registry.register(label, self.rng)

    def _step_keygen(self, actor: str) -> None:
        if actor == AUTHORITY_ROLE:
            raise ScenarioError("the authority does not hold a participant key")
        if actor in self.actors:
            raise ScenarioError("actor already has a key")
        key = keygen(self.backend, self.rng)
        self.actors[actor] = _Actor(actor, key, RecordDatabase(self.backend, key.fingerprint()))

    def _enroll(self, actor_name: str, label: str, payload: str) -> int:
        actor = self._actor(actor_name)
        state, request = begin_enrollment(actor.key, actor.db.next_slot(), label, self.rng)
        exchange_id = "e-%016x" % self.rng.getrandbits(64)
        request_env = self.send(
            actor_name,
            AUTHORITY_ROLE,
            messages.issuance_request_envelope(self.backend, actor_name, exchange_id, request),
        )
        raised = self.registry.issue(
            messages.parse_issuance_request(self.backend, request_env)
        )
        response_env = self.send(
            AUTHORITY_ROLE,
            actor_name,
            messages.issuance_response_envelope(
                self.backend, AUTHORITY_ROLE, exchange_id, raised[0], raised[1]
            ),
        )
        raised_a, raised_b = messages.parse_issuance_response(self.backend, response_env)
        index = complete_enrollment(actor.key, state, raised_a, raised_b)
        actor.db.append(index, payload)
        return index.slot

    def _step_enroll(self, actor: str, label: str, payload: str) -> None:
        self._enroll(actor, label, payload)

    def _step_enroll_directory(self, actor: str, label: str, payload: str) -> None:
        slot = self._enroll(actor, label, payload)
        self._actor(actor).directory[label] = slot

    def _step_submit(self, actor_name: str, tag: str, responder: str,
                     label: str, predicate: str) -> None:
        actor = self._actor(actor_name)
        self._actor(responder)
        if tag in self.queries:
            raise ScenarioError(f"query tag {tag!r} already used")
        if label not in actor.directory:
            raise ScenarioError(f"{actor_name} has no directory entry for {label!r}")
        slot = actor.directory[label]
        self._send_query(actor, tag, responder, slot, predicate)

    def _step_submit_matched(self, actor_name: str, tag: str, responder: str,
                             from_tag: str, predicate: str) -> None:
        actor = self._actor(actor_name)
        self._actor(responder)
        if tag in self.queries:
            raise ScenarioError(f"query tag {tag!r} already used")
        if from_tag not in actor.scans:
            raise ScenarioError(f"{actor_name} has not scanned {from_tag!r}")
        scan, _payload = actor.scans[from_tag]
        if not scan.matched:
            raise ScenarioError(f"{from_tag!r} matched no local record")
        self._send_query(actor, tag, responder, scan.slot, predicate)

    def _send_query(self, actor: _Actor, tag: str, responder: str,
                    slot: int, predicate: str) -> None:
        query = build_query(actor.key, actor.db, slot, predicate, self.rng)
        envelope = messages.comparison_request_envelope(self.backend, actor.name, query)
        received = self.send(actor.name, responder, envelope)
        self.queries[tag] = _PendingQuery(tag, actor.name, responder, query.query_id, received)

    def _pending(self, actor_name: str, tag: str) -> _PendingQuery:
        if tag not in self.queries:
            raise ScenarioError(f"unknown query tag {tag!r}")
        pending = self.queries[tag]
        if pending.responder != actor_name:
            raise ScenarioError(f"{tag!r} was addressed to {pending.responder!r}")
        return pending

    def _step_scan(self, actor_name: str, tag: str) -> None:
        actor = self._actor(actor_name)
        pending = self._pending(actor_name, tag)
        query = messages.parse_comparison_request(self.backend, pending.envelope)
        result = scan_for_match(actor.key, actor.db, query)
        payload = actor.db.row(result.slot).payload if result.matched else None
        actor.scans[tag] = (result, payload)

    def _respond(self, actor_name: str, tag: str, upstream: Optional[str]) -> None:
        actor = self._actor(actor_name)
        pending = self._pending(actor_name, tag)
        if tag not in actor.scans:
            self._step_scan(actor_name, tag)
        scan, payload = actor.scans[tag]
        query = messages.parse_comparison_request(self.backend, pending.envelope)
        verdict = apply_response_policy(
            self.script.policy, actor_name, query.predicate, payload, upstream
        )
        envelope = messages.comparison_response_envelope(
            actor_name, pending.query_id, verdict
        )
        received = self.send(actor_name, pending.submitter, envelope)
        submitter = self._actor(pending.submitter)
        submitter.received_verdicts[tag] = received.body["verdict"]
        self.run.responses.append(
            RespondRecord(tag, actor_name, scan.slot, scan.duplicate, payload, verdict)
        )

    def _step_respond(self, actor_name: str, tag: str) -> None:
        self._respond(actor_name, tag, None)

    def _step_respond_chained(self, actor_name: str, tag: str, upstream_tag: str) -> None:
        actor = self._actor(actor_name)
        if upstream_tag not in self.queries:
            raise ScenarioError(f"unknown upstream tag {upstream_tag!r}")
        if self.queries[upstream_tag].submitter != actor_name:
            raise ScenarioError(f"{actor_name} did not submit {upstream_tag!r}")
        if upstream_tag not in actor.received_verdicts:
            raise ScenarioError(f"no response received yet for {upstream_tag!r}")
        self._respond(actor_name, tag, actor.received_verdicts[upstream_tag])

    # -- checks ----------------------------------------------------------------

    def _evaluate_checks(self) -> None:
        # built-in: every response correlates to exactly one prior request
        request_ids: list[str] = []
        ok = True
        detail = ""
        for entry in self.run.transcript:
            if entry.envelope.kind in (messages.ISSUANCE_REQUEST,
                                       messages.COMPARISON_REQUEST):
                request_ids.append(entry.envelope.query_id)
            else:
                if request_ids.count(entry.envelope.query_id) != 1:
                    ok = False
                    detail = f"id {entry.envelope.query_id!r} in message {entry.seq}"
                    break
        self.run.checks.append(
            CheckResult("every response matches exactly one prior request", ok, detail)
        )
        for check in self.script.checks:
            if check.kind == "received-forbids":
                offenders = [
                    entry.seq
                    for entry in self.run.transcript
                    if entry.recipient == check.actor and check.text in entry.text
                ]
                self.run.checks.append(
                    CheckResult(
                        f"messages received by {check.actor} never contain {check.text!r}",
                        not offenders,
                        f"messages {offenders}" if offenders else "",
                    )
                )
            elif check.kind == "verdict":
                if check.actor not in self.actors:
                    self.run.checks.append(
                        CheckResult(f"{check.actor} exists", False, "no such actor")
                    )
                    continue
                got = self.actors[check.actor].received_verdicts.get(check.arg)
                self.run.checks.append(
                    CheckResult(
                        f"{check.actor} verdict for {check.arg} is {check.text!r}",
                        got == check.text,
                        f"got {got!r}" if got != check.text else "",
                    )
                )


def run_scenario(
    script: ScenarioScript,
    backend: GroupBackend,
    workdir: str | Path,
    seed: int = 0,
) -> ScenarioRun:
    """Execute a script start to finish.

    All nondeterminism flows from the seed, so equal seeds reproduce the
    transcript byte for byte. Any failing step aborts with its index;
    failing checks are collected in the result instead.
    """
    runner = _Runner(script, backend, Path(workdir), random.Random(seed))
    return runner.execute()
