"""Operator command line: serve, estimate, validate, stats, clone-form.

Exit codes: 0 success, 2 usage error, 3 ruleset error, 4 I/O error,
5 estimation error.  Flags beat environment variables beat defaults; the
recognized variables are RENTSPAN_RULESET, RENTSPAN_PORT, RENTSPAN_LOG,
RENTSPAN_LANG, RENTSPAN_HEADER_TIMEOUT, RENTSPAN_BODY_TIMEOUT and
RENTSPAN_MAX_BODY.
"""

from __future__ import annotations

import json
import sys
from importlib import resources
from typing import Optional, Tuple

import click

from .formcodec import FormSyntaxError, bind_fields, build_schema, decode_body
from .logstats import DEFAULT_ORIGIN_GROUPS, aggregate, render_text, to_json_dict
from .model import EstimateError, estimate as run_estimate, format_amount
from .pages import breakdown_rows, clone_form, localized_warnings, rent_line
from .ruleset import Ruleset, RulesetError, load_ruleset
from .server import Server, ServerConfig
from .tables import NoMatchingFact

EXIT_USAGE = 2  # click's own code for bad invocations
EXIT_RULESET = 3
EXIT_IO = 4
EXIT_ESTIMATE = 5


def _fail(code: int, message: str) -> None:
    click.echo(message, err=True)
    sys.exit(code)


def _load_ruleset(path: Optional[str]) -> Ruleset:
    try:
        if path is None:
            sample = resources.files("rentspan").joinpath("data/ruleset.sample.json")
            return load_ruleset(sample.read_bytes())
        return load_ruleset(path)
    except RulesetError as exc:
        _fail(EXIT_RULESET, f"ruleset error: {exc}")
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read ruleset: {exc}")


ruleset_option = click.option(
    "--ruleset", "ruleset_path", envvar="RENTSPAN_RULESET", default=None,
    help="Ruleset JSON file [default: the bundled sample].",
)
lang_option = click.option(
    "--lang", envvar="RENTSPAN_LANG", default="German", show_default=True,
    help="Output language (German or English).",
)


@click.group()
@click.version_option(package_name="rentspan")
def main() -> None:
    """Rent estimation from partial questionnaire answers."""


@main.command()
@ruleset_option
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", envvar="RENTSPAN_PORT", default=4322, show_default=True, type=int)
@click.option("--log", "log_path", envvar="RENTSPAN_LOG", default=None,
              help="Append one record per request to this file.")
@click.option("--header-timeout", envvar="RENTSPAN_HEADER_TIMEOUT",
              default=10.0, show_default=True, type=float)
@click.option("--body-timeout", envvar="RENTSPAN_BODY_TIMEOUT",
              default=30.0, show_default=True, type=float)
@click.option("--max-body", envvar="RENTSPAN_MAX_BODY",
              default=65536, show_default=True, type=int)
@click.option("--modern-status", is_flag=True,
              help="Answer failures with 4xx instead of a 200 error page.")
@click.option("--districts-route", is_flag=True,
              help="Enable GET /districts for form front ends.")
@click.option("--form-route", is_flag=True,
              help="Serve the built-in questionnaire on GET /.")
def serve(ruleset_path, host, port, log_path, header_timeout, body_timeout,
          max_body, modern_status, districts_route, form_route) -> None:
    """Accept form submissions on a TCP port, one connection at a time."""
    rs = _load_ruleset(ruleset_path)
    try:
        cfg = ServerConfig(
            host=host, port=port, header_timeout=header_timeout,
            body_timeout=body_timeout, max_body=max_body, log_path=log_path,
            modern_status=modern_status, districts_route=districts_route,
            form_route=form_route,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))
    server = Server(cfg, rs)
    try:
        bound_port = server.bind()
    except OSError as exc:
        _fail(EXIT_IO, f"cannot bind {host}:{port}: {exc}")
    click.echo(f"listening on {host}:{bound_port}")
    sys.stdout.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
        server.close()


@main.command()
@ruleset_option
@lang_option
@click.option("--answers", "answers_path", default=None,
              help="File holding a form-encoded body to replay.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.argument("fields", nargs=-1)
def estimate(ruleset_path, lang, answers_path, as_json, fields: Tuple[str, ...]) -> None:
    """Estimate from NAME=VALUE pairs in the form-field vocabulary.

    With no fields at all this prints the widest possible rent interval.
    """
    rs = _load_ruleset(ruleset_path)
    body = b""
    if answers_path is not None:
        try:
            with open(answers_path, "rb") as fh:
                body = fh.read().strip()
        except OSError as exc:
            _fail(EXIT_IO, f"cannot read answers: {exc}")
    if fields:
        inline = "&".join(fields).encode("latin-1")
        body = body + b"&" + inline if body else inline

    try:
        field_map = decode_body(body)
        bound = bind_fields(field_map, build_schema(rs), rs)
        # an explicit Language field in the answers beats the --lang flag
        language = bound.language if any(n == "Language" for n, _ in field_map) else lang
        est = run_estimate(bound.answers, rs)
    except (FormSyntaxError, EstimateError, NoMatchingFact) as exc:
        _fail(EXIT_ESTIMATE, f"estimation error: {exc}")

    if as_json:
        payload = {
            "rent": [format_amount(est.rent.lo, "en"), format_amount(est.rent.hi, "en")],
            "breakdown": {
                "size": [str(est.breakdown.size.lo), str(est.breakdown.size.hi)],
                "base_rate": [format_amount(est.breakdown.base_rate.lo, "en"),
                              format_amount(est.breakdown.base_rate.hi, "en")],
                "deviation_sum": [str(est.breakdown.deviation_sum.lo),
                                  str(est.breakdown.deviation_sum.hi)],
                "imprecision": [str(est.breakdown.imprecision.lo),
                                str(est.breakdown.imprecision.hi)],
                "fixed_costs": [format_amount(est.breakdown.fixed_costs.lo, "en"),
                                format_amount(est.breakdown.fixed_costs.hi, "en")],
            },
            "warnings": list(est.warnings) + list(bound.warnings),
        }
        click.echo(json.dumps(payload, ensure_ascii=False))
        return

    click.echo(rent_line(est, language))
    for label, value in breakdown_rows(est, language):
        click.echo(f"  {label}: {value}")
    for note in localized_warnings(list(est.warnings) + list(bound.warnings), language):
        click.echo(f"  ! {note}")


@main.command()
@ruleset_option
def validate(ruleset_path) -> None:
    """Load a ruleset and print its validation warnings."""
    rs = _load_ruleset(ruleset_path)
    for warning in rs.warnings:
        click.echo(f"warning: {warning}")
    click.echo(
        f"ok: {rs.city} {rs.edition}, {len(rs.districts)} districts, "
        f"{len(rs.base_rent.facts)} base-rent entries, "
        f"{len(rs.deviation_tables)} deviation tables, "
        f"{len(rs.flags)} questions, {len(rs.fixed_costs)} fixed-cost items"
    )


@main.command()
@click.argument("log_path")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.option("--mapping", "mapping_path", default=None,
              help="JSON file mapping domain labels to Uni/Com/Pro groups.")
@click.option("--utc-offset", default=60, show_default=True, type=int,
              help="Fixed clock offset in minutes for weekday/hour buckets.")
@click.option("-o", "--output", "output_path", default=None,
              help="Write the report here instead of stdout.")
def stats(log_path, as_json, mapping_path, utc_offset, output_path) -> None:
    """Aggregate a request log into outcome/origin/agent/time tables."""
    groups = DEFAULT_ORIGIN_GROUPS
    if mapping_path is not None:
        try:
            with open(mapping_path, "r", encoding="utf-8") as fh:
                groups = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            _fail(EXIT_IO, f"cannot read mapping: {exc}")
    try:
        with open(log_path, "r", encoding="utf-8") as fh:
            report = aggregate(fh, utc_offset_minutes=utc_offset, origin_groups=groups)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read log: {exc}")
    text = json.dumps(to_json_dict(report)) + "\n" if as_json else render_text(report)
    if output_path is None:
        click.echo(text, nl=False)
    else:
        try:
            with open(output_path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            _fail(EXIT_IO, f"cannot write report: {exc}")


@main.command("clone-form")
@ruleset_option
@lang_option
@click.option("--fields", "fields_spec", default=None,
              help="Comma-separated field names to keep; an empty string "
                   "gives the minimal clone (just a submit button). "
                   "Omit the option for the full questionnaire.")
@click.option("--fixed", "fixed_pairs", multiple=True, metavar="NAME=VALUE",
              help="Hidden preset field; may be repeated.")
@click.option("--action", default="http://localhost:4322", show_default=True,
              help="Where the form posts to.")
@click.option("-o", "--output", "output_path", default=None,
              help="Write the page here instead of stdout.")
def clone_form_cmd(ruleset_path, lang, fields_spec, fixed_pairs, action, output_path) -> None:
    """Emit a standalone HTML form that posts to a running server."""
    rs = _load_ruleset(ruleset_path)
    subset = None
    if fields_spec is not None:
        subset = [f.strip() for f in fields_spec.split(",") if f.strip()]
    fixed = {}
    for pair in fixed_pairs:
        name, sep, value = pair.partition("=")
        if not sep:
            raise click.UsageError(f"--fixed needs NAME=VALUE, got {pair!r}")
        fixed[name] = value
    try:
        page = clone_form(rs, subset=subset, fixed=fixed, action=action, language=lang)
    except (ValueError, FormSyntaxError) as exc:
        raise click.UsageError(str(exc))
    if output_path is None:
        click.echo(page, nl=False)
    else:
        try:
            with open(output_path, "w", encoding="latin-1") as fh:
                fh.write(page)
        except OSError as exc:
            _fail(EXIT_IO, f"cannot write form: {exc}")


if __name__ == "__main__":
    main()
