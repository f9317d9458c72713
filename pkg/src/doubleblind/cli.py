"""Command-line tooling: authority (`ted`), operator (`party`), runner (`harness`).

State lives in plain files: a registry file for the authority, and a
key file plus record databases inside each party's home directory.
Queries and responses travel as envelope files, so two parties on one
machine can run the whole protocol by pointing commands at each other's
output files.
"""

from __future__ import annotations

import json
import random
import secrets
import sys
from pathlib import Path

import click

from . import harness as harness_mod
from . import messages, multikey
from .authority import AuthorityError, EntityRegistry, IssuanceRequest
from .groups import (
    MOCK_DEFAULT_PRIME,
    DecodeError,
    GroupError,
    MockBackend,
    Side,
    element_from_text,
    element_to_text,
    production_backend,
)
from .participant import (
    ParticipantError,
    RecordDatabase,
    build_query,
    enroll_record,
    keygen,
    load_key,
    save_key,
    scan_for_match,
)

KEY_FILE = "party.key"
DB_FILE = "records.tsv"
MK_FILE = "multikey.tsv"

_ERRORS = (AuthorityError, ParticipantError, GroupError, DecodeError, OSError)


def _make_backend(kind: str, mock_p: int):
    return MockBackend(mock_p) if kind == "mock" else production_backend()


def _make_rng(seed):
    return random.Random(seed) if seed is not None else secrets.SystemRandom()


def _load_registry(path: str) -> EntityRegistry:
    try:
        return EntityRegistry.load(path)
    except FileNotFoundError:
        raise click.ClickException(
            f"no registry at {path} (run `ted init` first)"
        ) from None


def _party_paths(home: str) -> tuple[Path, Path, Path]:
    base = Path(home)
    return base / KEY_FILE, base / DB_FILE, base / MK_FILE


def _load_party(home: str):
    key_path, db_path, _ = _party_paths(home)
    if not key_path.exists():
        raise click.ClickException(
            f"no key at {key_path} (run `party keygen` first)"
        )
    key = load_key(key_path)
    if db_path.exists():
        db = RecordDatabase.load(db_path)
    else:
        db = RecordDatabase(key.backend, key.fingerprint())
    return key, db, db_path


backend_option = click.option(
    "--backend", "backend_kind", type=click.Choice(["mock", "prod"]),
    default="mock", show_default=True, help="Group backend.",
)
mock_p_option = click.option(
    "--mock-p", type=int, default=MOCK_DEFAULT_PRIME, show_default=True,
    help="Mock group order (prime).",
)
seed_option = click.option(
    "--seed", type=int, default=None,
    help="Seed for reproducible randomness (default: OS entropy).",
)
registry_option = click.option(
    "-r", "--registry", "registry_path", default="registry.tsv",
    show_default=True, help="Registry file path.",
)
home_option = click.option(
    "--home", default=".", show_default=True, help="Party state directory.",
)


@click.group()
def main():
    """Double blind comparisons over encrypted record identifiers."""


@main.group()
def ted():
    """Trusted authority: registry and blinded issuance."""


@ted.command("init")
@click.argument("registry_path")
@backend_option
@mock_p_option
def ted_init(registry_path, backend_kind, mock_p):
    """Create an empty registry file."""
    backend = _make_backend(backend_kind, mock_p)
    EntityRegistry(backend).save(registry_path)
    click.echo(f"initialized {registry_path} ({backend.params_line()})")


@ted.command("register")
@click.argument("label")
@registry_option
@seed_option
def ted_register(label, registry_path, seed):
    """Assign a fresh identifier to LABEL."""
    registry = _load_registry(registry_path)
    try:
        receipt = registry.register(label, _make_rng(seed))
    except _ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    registry.save(registry_path)
    click.echo(f"registered {label} receipt={receipt}")


@ted.command("issue")
@click.argument("label")
@click.argument("base_a_hex")
@click.argument("base_b_hex")
@registry_option
def ted_issue(label, base_a_hex, base_b_hex, registry_path):
    """Raise two blinded bases to LABEL's identifier; prints both elements."""
    registry = _load_registry(registry_path)
    backend = registry.backend
    try:
        base_a = _parse_base(backend, base_a_hex, Side.SOURCE_A)
        base_b = _parse_base(backend, base_b_hex, Side.SOURCE_B)
        raised_a, raised_b = registry.issue(IssuanceRequest(label, base_a, base_b))
    except _ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(element_to_text(backend, raised_a))
    click.echo(element_to_text(backend, raised_b))


def _parse_base(backend, text: str, side: Side):
    if ":" in text:
        element = element_from_text(backend, text)
        if element.side is not side:
            raise DecodeError(f"expected a side-{side.value} element")
        return element
    return backend.decode(bytes.fromhex(text), side)


@main.group()
def party():
    """Database operator: keys, enrollment, queries, responses."""


@party.command("keygen")
@home_option
@backend_option
@mock_p_option
@seed_option
def party_keygen(home, backend_kind, mock_p, seed):
    """Generate this party's private key."""
    key_path, _, _ = _party_paths(home)
    if key_path.exists():
        raise click.ClickException(f"refusing to overwrite {key_path}")
    key_path.parent.mkdir(parents=True, exist_ok=True)
    key = keygen(_make_backend(backend_kind, mock_p), _make_rng(seed))
    save_key(key, key_path)
    click.echo(f"fingerprint={key.fingerprint()}")


@party.command("enroll")
@click.argument("label")
@click.argument("payload")
@home_option
@registry_option
@seed_option
def party_enroll(label, payload, home, registry_path, seed):
    """Enroll a record for LABEL with PAYLOAD via blinded issuance."""
    key, db, db_path = _load_party(home)
    registry = _load_registry(registry_path)
    try:
        index = enroll_record(key, db, registry, label, payload, _make_rng(seed))
    except _ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    db.save(db_path)
    click.echo(f"enrolled slot={index.slot}")


@party.command("query")
@click.argument("slot", type=int)
@click.argument("predicate")
@home_option
@seed_option
@click.option("--out", default="query.json", show_default=True,
              help="Envelope file to write.")
def party_query(slot, predicate, home, seed, out):
    """Build a rerandomized comparison query about local SLOT."""
    key, db, _ = _load_party(home)
    try:
        query = build_query(key, db, slot, predicate, _make_rng(seed))
    except _ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    envelope = messages.comparison_request_envelope(key.backend, "party", query)
    Path(out).write_text(messages.envelope_to_json(envelope), encoding="utf-8")
    click.echo(f"query_id={query.query_id} written to {out}")


def _read_comparison_request(backend, path):
    envelope = messages.envelope_from_json(Path(path).read_text(encoding="utf-8"))
    if envelope.kind != messages.COMPARISON_REQUEST:
        raise click.ClickException(f"{path} is a {envelope.kind}, not a comparison request")
    return envelope, messages.parse_comparison_request(backend, envelope)


@party.command("scan")
@click.argument("query_file")
@home_option
def party_scan(query_file, home):
    """Scan the local database for the query's hidden identifier."""
    key, db, _ = _load_party(home)
    try:
        _, query = _read_comparison_request(key.backend, query_file)
        result = scan_for_match(key, db, query)
    except _ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    if result.duplicate:
        click.echo("warning: duplicate matches, reporting the lowest slot")
    click.echo(f"match slot={result.slot}" if result.matched else "no match")


@party.command("respond")
@click.argument("query_file")
@home_option
@click.option("--policy", "policy_file", default=None,
              help="Policy table (scenario-script policy lines).")
@click.option("--role", default="party", show_default=True,
              help="Role name used for policy matching.")
@click.option("--out", default="response.json", show_default=True,
              help="Response envelope file to write.")
def party_respond(query_file, home, policy_file, role, out):
    """Answer a received query with a policy verdict."""
    key, db, _ = _load_party(home)
    try:
        envelope, query = _read_comparison_request(key.backend, query_file)
        result = scan_for_match(key, db, query)
    except _ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    payload = db.row(result.slot).payload if result.matched else None
    if policy_file is not None:
        policy = harness_mod.load_script(policy_file).policy
        verdict = harness_mod.apply_response_policy(
            policy, role, query.predicate, payload
        )
    else:
        verdict = "record on file" if result.matched else harness_mod.NO_RECORD_VERDICT
    response = messages.comparison_response_envelope(role, envelope.query_id, verdict)
    Path(out).write_text(messages.envelope_to_json(response), encoding="utf-8")
    click.echo(verdict)


@party.command("mk-setup")
@click.argument("dimensions", type=int)
@home_option
@registry_option
@seed_option
@click.option("--labels-from", default=None,
              help="Adopt dimension labels from another party's multikey file.")
def party_mk_setup(dimensions, home, registry_path, seed, labels_from):
    """Create this party's multi-key dimension attributes.

    Registers fresh routing labels unless --labels-from points at an
    existing multikey file whose labels the whole federation shares.
    """
    key, _, _ = _load_party(home)
    _, _, mk_path = _party_paths(home)
    if mk_path.exists():
        raise click.ClickException(f"refusing to overwrite {mk_path}")
    registry = _load_registry(registry_path)
    rng = _make_rng(seed)
    try:
        if labels_from is not None:
            setup = multikey.MultiKeyDatabase.load(labels_from).dimension_keys.setup
            if setup.dimensions != dimensions:
                raise click.ClickException(
                    f"{labels_from} has d={setup.dimensions}, not {dimensions}"
                )
        else:
            setup = multikey.setup_dimensions(registry, dimensions, rng)
            registry.save(registry_path)
        dims = multikey.enroll_party_dimensions(key, setup, registry, rng)
    except _ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    multikey.MultiKeyDatabase(key.backend, key.fingerprint(), dims).save(mk_path)
    click.echo(f"multikey setup d={dimensions} written to {mk_path}")


@party.command("mk-enroll")
@click.argument("bits")
@click.argument("payload")
@home_option
def party_mk_enroll(bits, payload, home):
    """Enroll a record at the d-bit address BITS."""
    key, _, _ = _load_party(home)
    _, _, mk_path = _party_paths(home)
    if not mk_path.exists():
        raise click.ClickException(f"no multikey database at {mk_path} (run mk-setup)")
    try:
        db = multikey.MultiKeyDatabase.load(mk_path)
        db.add(key, bits, payload)
    except _ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    db.save(mk_path)
    click.echo(f"enrolled address={bits}")


@party.command("mk-query")
@click.argument("bits")
@home_option
@seed_option
@click.option("--out", default="mk-query.json", show_default=True,
              help="File receiving the per-dimension envelope list.")
def party_mk_query(bits, home, seed, out):
    """Build one comparison query per dimension for the address BITS."""
    key, _, _ = _load_party(home)
    _, _, mk_path = _party_paths(home)
    if not mk_path.exists():
        raise click.ClickException(f"no multikey database at {mk_path} (run mk-setup)")
    try:
        db = multikey.MultiKeyDatabase.load(mk_path)
        queries = multikey.build_multikey_query(key, db.dimension_keys, bits,
                                                _make_rng(seed))
    except _ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    envelopes = [
        json.loads(messages.envelope_to_json(
            messages.comparison_request_envelope(key.backend, "party", query)
        ))
        for query in queries
    ]
    Path(out).write_text(json.dumps(envelopes, indent=2) + "\n", encoding="utf-8")
    click.echo(f"{len(queries)} queries written to {out}")


@party.command("mk-match")
@click.argument("query_file")
@home_option
def party_mk_match(query_file, home):
    """Resolve a multi-key query bit by bit and report the addressed record."""
    key, _, _ = _load_party(home)
    _, _, mk_path = _party_paths(home)
    if not mk_path.exists():
        raise click.ClickException(f"no multikey database at {mk_path} (run mk-setup)")
    try:
        db = multikey.MultiKeyDatabase.load(mk_path)
        raw = json.loads(Path(query_file).read_text(encoding="utf-8"))
        queries = [
            messages.parse_comparison_request(
                key.backend, messages.envelope_from_json(json.dumps(item))
            )
            for item in raw
        ]
        outcome = multikey.match_multikey(key, db, queries)
    except _ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    if outcome.foreign:
        click.echo("foreign query")
    elif outcome.record is None:
        click.echo(f"no record at address={outcome.address}")
    else:
        click.echo(f"match address={outcome.address} payload={outcome.record.payload}")
    click.echo(f"comparisons={outcome.comparisons}")


@main.group()
def harness():
    """Scenario runner over file-based message passing."""


@harness.command("run")
@click.argument("script_file")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--backend", "backend_kind", type=click.Choice(["mock", "prod"]),
              default="mock", show_default=True)
@mock_p_option
@click.option("--workdir", default="harness-run", show_default=True)
def harness_run(script_file, seed, backend_kind, mock_p, workdir):
    """Execute SCRIPT_FILE; exit 0 only if every step and check passes."""
    backend = _make_backend(backend_kind, mock_p)
    try:
        script = harness_mod.load_script(script_file)
        run = harness_mod.run_scenario(script, backend, workdir, seed)
    except (harness_mod.ScenarioError, *_ERRORS) as exc:
        raise click.ClickException(str(exc)) from exc
    report = (Path(workdir) / "report.txt").read_text(encoding="utf-8")
    click.echo(report, nl=False)
    if not run.passed:
        sys.exit(1)


if __name__ == "__main__":
    main()
