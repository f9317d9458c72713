"""End-to-end command line flows over real files."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

import doubleblind as db
from doubleblind.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, args, **kwargs):
    result = runner.invoke(main, args, catch_exceptions=False, **kwargs)
    assert result.exit_code == 0, result.output
    return result


class TestTed:
    def test_init_register_issue(self, runner, tmp_path):
        reg = str(tmp_path / "registry.tsv")
        invoke(runner, ["ted", "init", reg, "--mock-p", "101"])
        assert Path(reg).read_text() == "mock p=101\n"
        invoke(runner, ["ted", "register", "C55-111-555", "-r", reg, "--seed", "1"])
        result = invoke(runner, ["ted", "issue", "C55-111-555", "A:03", "B:05", "-r", reg])
        lines = result.output.strip().splitlines()
        assert len(lines) == 2
        assert lines[0].startswith("A:") and lines[1].startswith("B:")
        registry = db.EntityRegistry.load(reg)
        n = registry.privileged_identifier("C55-111-555")
        backend = registry.backend
        assert db.element_from_text(backend, lines[0]).value == 3 * n % 101

    def test_duplicate_register_fails(self, runner, tmp_path):
        reg = str(tmp_path / "registry.tsv")
        invoke(runner, ["ted", "init", reg, "--mock-p", "101"])
        invoke(runner, ["ted", "register", "X", "-r", reg])
        result = runner.invoke(main, ["ted", "register", "X", "-r", reg])
        assert result.exit_code != 0
        assert "already registered" in result.output

    def test_issue_unknown_label_fails(self, runner, tmp_path):
        reg = str(tmp_path / "registry.tsv")
        invoke(runner, ["ted", "init", reg, "--mock-p", "101"])
        result = runner.invoke(main, ["ted", "issue", "ghost", "A:03", "B:05", "-r", reg])
        assert result.exit_code != 0
        assert "unregistered entity" in result.output

    def test_missing_registry_hint(self, runner, tmp_path):
        result = runner.invoke(
            main, ["ted", "register", "X", "-r", str(tmp_path / "none.tsv")]
        )
        assert result.exit_code != 0
        assert "ted init" in result.output


def setup_federation(runner, tmp_path, labels_payloads_a, labels_payloads_b):
    reg = str(tmp_path / "registry.tsv")
    home_a, home_b = str(tmp_path / "alice"), str(tmp_path / "bob")
    invoke(runner, ["ted", "init", reg])
    registered = set()
    for label, _ in labels_payloads_a + labels_payloads_b:
        if label not in registered:
            invoke(runner, ["ted", "register", label, "-r", reg])
            registered.add(label)
    for home, rows in ((home_a, labels_payloads_a), (home_b, labels_payloads_b)):
        invoke(runner, ["party", "keygen", "--home", home])
        for label, payload in rows:
            invoke(
                runner,
                ["party", "enroll", label, payload, "--home", home, "-r", reg],
            )
    return reg, home_a, home_b


class TestParty:
    def test_query_scan_respond_flow(self, runner, tmp_path):
        _, home_a, home_b = setup_federation(
            runner,
            tmp_path,
            [("SN-1", "pilot"), ("SN-2", "navigator")],
            [("SN-3", "healthy"), ("SN-1", "pregnant")],
        )
        query_file = str(tmp_path / "query.json")
        result = invoke(
            runner,
            ["party", "query", "0", "fit to fly", "--home", home_a, "--out", query_file],
        )
        assert "query_id=q-" in result.output

        result = invoke(runner, ["party", "scan", query_file, "--home", home_b])
        assert result.output.strip() == "match slot=1"

        response_file = str(tmp_path / "response.json")
        result = invoke(
            runner,
            ["party", "respond", query_file, "--home", home_b, "--out", response_file],
        )
        assert result.output.strip() == "record on file"
        response = json.loads(Path(response_file).read_text())
        assert response["kind"] == "comparison-response"
        assert list(response["body"]) == ["verdict"]

    def test_scan_no_match(self, runner, tmp_path):
        _, home_a, home_b = setup_federation(
            runner, tmp_path, [("SN-1", "pilot")], [("SN-2", "other")]
        )
        query_file = str(tmp_path / "q.json")
        invoke(runner, ["party", "query", "0", "pred", "--home", home_a, "--out", query_file])
        result = invoke(runner, ["party", "scan", query_file, "--home", home_b])
        assert result.output.strip() == "no match"
        result = invoke(runner, ["party", "respond", query_file, "--home", home_b,
                                 "--out", str(tmp_path / "r.json")])
        assert result.output.strip() == "no record"

    def test_duplicate_scan_warning(self, runner, tmp_path):
        _, home_a, home_b = setup_federation(
            runner, tmp_path, [("SN-1", "pilot")], [("SN-1", "x"), ("SN-1", "y")]
        )
        query_file = str(tmp_path / "q.json")
        invoke(runner, ["party", "query", "0", "pred", "--home", home_a, "--out", query_file])
        result = invoke(runner, ["party", "scan", query_file, "--home", home_b])
        assert "warning: duplicate matches" in result.output
        assert "match slot=0" in result.output

    def test_respond_with_policy_table(self, runner, tmp_path):
        _, home_a, home_b = setup_federation(
            runner, tmp_path, [("SN-1", "pilot")], [("SN-1", "4 months pregnant")]
        )
        policy_file = tmp_path / "policy.tsv"
        policy_file.write_text(
            "policy\t*\tfit to fly\t4 months pregnant\t*\trestricted duties\n"
        )
        query_file = str(tmp_path / "q.json")
        invoke(runner, ["party", "query", "0", "fit to fly", "--home", home_a,
                        "--out", query_file])
        result = invoke(runner, ["party", "respond", query_file, "--home", home_b,
                                 "--policy", str(policy_file),
                                 "--out", str(tmp_path / "r.json")])
        assert result.output.strip() == "restricted duties"

    def test_keygen_refuses_overwrite(self, runner, tmp_path):
        home = str(tmp_path / "party")
        invoke(runner, ["party", "keygen", "--home", home])
        result = runner.invoke(main, ["party", "keygen", "--home", home])
        assert result.exit_code != 0


class TestMultiKeyCli:
    def test_full_multikey_flow(self, runner, tmp_path):
        reg = str(tmp_path / "registry.tsv")
        home_a, home_b = str(tmp_path / "alice"), str(tmp_path / "bob")
        invoke(runner, ["ted", "init", reg])
        invoke(runner, ["party", "keygen", "--home", home_a])
        invoke(runner, ["party", "keygen", "--home", home_b])
        invoke(runner, ["party", "mk-setup", "3", "--home", home_a, "-r", reg])
        invoke(runner, ["party", "mk-setup", "3", "--home", home_b, "-r", reg,
                        "--labels-from", str(Path(home_a) / "multikey.tsv")])
        for value in range(8):
            bits = format(value, "03b")
            invoke(runner, ["party", "mk-enroll", bits, f"record {bits}", "--home", home_b])
        query_file = str(tmp_path / "mkq.json")
        invoke(runner, ["party", "mk-query", "101", "--home", home_a, "--out", query_file])
        result = invoke(runner, ["party", "mk-match", query_file, "--home", home_b])
        assert "match address=101 payload=record 101" in result.output
        assert "comparisons=6" in result.output

    def test_mk_match_foreign(self, runner, tmp_path):
        reg = str(tmp_path / "registry.tsv")
        home_a, home_b = str(tmp_path / "alice"), str(tmp_path / "bob")
        invoke(runner, ["ted", "init", reg])
        invoke(runner, ["party", "keygen", "--home", home_a])
        invoke(runner, ["party", "keygen", "--home", home_b])
        # independent setups: bob's dimensions use different identifiers
        invoke(runner, ["party", "mk-setup", "2", "--home", home_a, "-r", reg])
        invoke(runner, ["party", "mk-setup", "2", "--home", home_b, "-r", reg])
        invoke(runner, ["party", "mk-enroll", "01", "x", "--home", home_b])
        query_file = str(tmp_path / "mkq.json")
        invoke(runner, ["party", "mk-query", "01", "--home", home_a, "--out", query_file])
        result = invoke(runner, ["party", "mk-match", query_file, "--home", home_b])
        assert "foreign query" in result.output


class TestHarnessCli:
    def test_fixture_run_exits_zero(self, runner, tmp_path):
        from importlib import resources

        script = resources.files("doubleblind") / "scenarios" / "captain_smith.script"
        workdir = str(tmp_path / "run")
        result = invoke(
            runner,
            ["harness", "run", str(script), "--seed", "5", "--workdir", workdir],
        )
        assert "result: PASS" in result.output
        assert "not able to fly CF-18 combat missions" in result.output
        assert (Path(workdir) / "transcript").is_dir()

    def test_failing_check_exits_nonzero(self, runner, tmp_path):
        script = tmp_path / "bad.script"
        script.write_text(
            "ted\tregister\tE\n"
            "alice\tkeygen\n"
            "bob\tkeygen\n"
            "alice\tenroll-directory\tE\tmine\n"
            "bob\tenroll\tE\ttheirs\n"
            "alice\tsubmit\tq1\tbob\tE\tpred\n"
            "bob\trespond\tq1\n"
            "expect\tverdict\talice\tq1\twill never happen\n"
        )
        result = runner.invoke(
            main,
            ["harness", "run", str(script), "--workdir", str(tmp_path / "run")],
        )
        assert result.exit_code == 1
        assert "result: FAIL" in result.output

    def test_broken_script_reports_step(self, runner, tmp_path):
        script = tmp_path / "broken.script"
        script.write_text("alice\tenroll\tX\tpayload\n")
        result = runner.invoke(
            main, ["harness", "run", str(script), "--workdir", str(tmp_path / "run")]
        )
        assert result.exit_code != 0
        assert "step 1" in result.output


def test_standalone_groups_exposed():
    from doubleblind.cli import harness, party, ted

    assert ted.name == "ted"
    assert party.name == "party"
    assert harness.name == "harness"
