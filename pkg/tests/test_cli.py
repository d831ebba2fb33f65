import json

from click.testing import CliRunner

from rentspan.cli import main
from rentspan.server import RequestRecord

from conftest import SAMPLE_RULESET
from test_logstats import record


def invoke(*args):
    return CliRunner().invoke(main, args)


def test_validate_sample():
    result = invoke("validate")
    assert result.exit_code == 0
    assert "ok:" in result.output


def test_validate_missing_file_exits_with_io_code(tmp_path):
    result = invoke("validate", "--ruleset", str(tmp_path / "nope.json"))
    assert result.exit_code == 4


def test_validate_broken_ruleset_exits_with_ruleset_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"meta": {}}')
    result = invoke("validate", "--ruleset", str(bad))
    assert result.exit_code == 3


def test_estimate_blank_prints_global_interval():
    result = invoke("estimate")
    assert result.exit_code == 0
    assert "83,75" in result.output and "4312,68" in result.output


def test_estimate_inline_fields_json():
    result = invoke("estimate", "--json", "M2_min=76", "M2_max=85")
    assert result.exit_code == 0
    payload = json.loads(result.output)
    assert payload["breakdown"]["size"] == ["76", "85"]


def test_estimate_explicit_ruleset_path():
    result = invoke("estimate", "--ruleset", str(SAMPLE_RULESET), "--lang", "English")
    assert result.exit_code == 0
    assert "83.75" in result.output


def test_estimate_language_field_wins():
    result = invoke("estimate", "Language=English")
    assert "83.75" in result.output


def test_estimate_bad_field_exits_with_estimate_code():
    result = invoke("estimate", "ZI_min=1.5")
    assert result.exit_code == 5
    assert "integer required" in result.output


def test_estimate_answers_file(tmp_path):
    answers = tmp_path / "body.txt"
    answers.write_bytes(b"M2_min=50&M2_max=60")
    result = invoke("estimate", "--answers", str(answers), "--json")
    assert result.exit_code == 0
    assert json.loads(result.output)["breakdown"]["size"] == ["50", "60"]


def test_estimate_missing_answers_file(tmp_path):
    result = invoke("estimate", "--answers", str(tmp_path / "gone.txt"))
    assert result.exit_code == 4


def test_stats_renders_report(tmp_path):
    log = tmp_path / "req.log"
    log.write_text("\n".join([record().to_line(), record(outcome="syntax_error").to_line()]) + "\n")
    result = invoke("stats", str(log))
    assert result.exit_code == 0
    assert "Requests" in result.output and "syntax_error" in result.output


def test_stats_json(tmp_path):
    log = tmp_path / "req.log"
    log.write_text(record().to_line() + "\n")
    result = invoke("stats", str(log), "--json")
    payload = json.loads(result.output)
    assert payload["total"] == 1
    assert payload["outcomes"]["ok"] == 1


def test_stats_missing_log():
    assert invoke("stats", "/nonexistent/req.log").exit_code == 4


def test_clone_form_minimal(tmp_path):
    out = tmp_path / "clone.html"
    result = invoke("clone-form", "--fields", "", "-o", str(out))
    assert result.exit_code == 0
    page = out.read_text(encoding="latin-1")
    assert page.count("<INPUT") == 1 and 'TYPE="submit"' in page


def test_clone_form_subset_stdout():
    result = invoke("clone-form", "--fields", "M2_min,M2_max")
    assert result.exit_code == 0
    assert 'NAME="M2_min"' in result.output


def test_clone_form_unknown_field_is_usage_error():
    result = invoke("clone-form", "--fields", "Bogus")
    assert result.exit_code == 2


def test_clone_form_fixed_value():
    result = invoke("clone-form", "--fields", "", "--fixed", "District=Bogenhausen")
    assert result.exit_code == 0
    assert 'VALUE="Bogenhausen"' in result.output
