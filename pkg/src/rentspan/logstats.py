"""Request-log aggregation: outcomes, origins, user agents, access times.

One streaming pass turns a request log into a report of counts and shares
per outcome, origin group, browser family, operating system, language,
month, weekday and hour.  Reports for independent logs merge by addition.
Unparseable lines land in a malformed bucket and never abort the run.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from datetime import timedelta, timezone
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .server import RequestRecord, OUTCOMES

FAMILIES = ("Mozilla", "Compatible", "Mosaic", "Other")
OSES = (
    "Win95", "Win16", "WinNT", "Windows",
    "SunOS", "HP-UX", "Linux", "Irix", "Macintosh", "OS/2", "Other",
)
GROUPS = ("Uni", "Com", "Pro", "Other", "anonymous", "self_test")
WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
          "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")

# domain labels with a known affiliation; configurable via a mapping file
DEFAULT_ORIGIN_GROUPS: Dict[str, str] = {
    "uni-muenchen": "Uni",
    "lrz-muenchen": "Uni",
    "tu-muenchen": "Uni",
    "sni": "Com",
    "siemens": "Com",
    "dtag": "Com",
    "mpg": "Com",
    "sdm": "Com",
    "bmw": "Com",
    "gsf": "Com",
    "t-online": "Pro",
    "eunet": "Pro",
    "metronet": "Pro",
    "uunet": "Pro",
}


@dataclass(frozen=True)
class AgentClass:
    family: str
    os: str


@dataclass(frozen=True)
class OriginClass:
    tld: str
    group: str


def classify_agent(user_agent: str) -> AgentClass:
    """Keyword classification; total over arbitrary strings."""
    ua = user_agent.lower()
    if "mozilla" in ua and "compatible" not in ua:
        family = "Mozilla"
    elif "compatible" in ua:
        family = "Compatible"
    elif "mosaic" in ua:
        family = "Mosaic"
    else:
        family = "Other"

    os_tokens = (
        ("Win95", ("windows 95", "win95")),
        ("WinNT", ("windows nt", "winnt")),
        ("Win16", ("windows 3.1", "win16", "windows 16")),
        ("Windows", ("windows", "win32", "win 9x")),
        ("SunOS", ("sunos",)),
        ("HP-UX", ("hp-ux", "hpux")),
        ("Linux", ("linux",)),
        ("Irix", ("irix",)),
        ("Macintosh", ("macintosh", "mac_", "mac os", "macos")),
        ("OS/2", ("os/2",)),
    )
    for name, tokens in os_tokens:
        if any(token in ua for token in tokens):
            return AgentClass(family, name)
    return AgentClass(family, "Other")


def classify_origin(peer: str, groups: Optional[Mapping[str, str]] = None) -> OriginClass:
    """Group a peer host string; anonymous iff there is none."""
    if groups is None:
        groups = DEFAULT_ORIGIN_GROUPS
    host = (peer or "").strip().lower()
    if host in ("", "-", "anonymous"):
        return OriginClass("", "anonymous")
    if host in ("localhost", "127.0.0.1", "::1") or host.startswith("127."):
        return OriginClass("", "self_test")
    if all(part.isdigit() for part in host.split(".")):
        return OriginClass("", "Other")  # bare address, no symbolic name
    labels = host.split(".")
    tld = labels[-1]
    for label in labels:
        if label in groups:
            return OriginClass(tld, groups[label])
    return OriginClass(tld, "Other")


@dataclass
class Report:
    total: int = 0
    malformed: int = 0
    outcomes: Counter = field(default_factory=Counter)
    groups: Counter = field(default_factory=Counter)
    tlds: Counter = field(default_factory=Counter)
    families: Counter = field(default_factory=Counter)
    oses: Counter = field(default_factory=Counter)
    languages: Counter = field(default_factory=Counter)
    months: Counter = field(default_factory=Counter)    # 1..12
    weekdays: Counter = field(default_factory=Counter)  # 0=Mon .. 6=Sun
    hours: Counter = field(default_factory=Counter)     # 0..23

    @property
    def parsed(self) -> int:
        return self.total - self.malformed

    def share(self, count: int) -> float:
        """Percentage of the parsed records."""
        if self.parsed == 0:
            return 0.0
        return 100.0 * count / self.parsed

    def __add__(self, other: "Report") -> "Report":
        merged = Report(total=self.total + other.total,
                        malformed=self.malformed + other.malformed)
        for name in ("outcomes", "groups", "tlds", "families", "oses",
                     "languages", "months", "weekdays", "hours"):
            getattr(merged, name).update(getattr(self, name))
            getattr(merged, name).update(getattr(other, name))
        return merged


def aggregate_records(
    records: Iterable[RequestRecord],
    utc_offset_minutes: int = 60,
    origin_groups: Optional[Mapping[str, str]] = None,
) -> Report:
    """Single pass over parsed records.

    Weekday and hour use a fixed clock offset (default +01:00, no daylight
    saving) applied to the stored timestamps.
    """
    zone = timezone(timedelta(minutes=utc_offset_minutes))
    report = Report()
    for record in records:
        report.total += 1
        report.outcomes[record.outcome] += 1
        origin = classify_origin(record.peer, origin_groups)
        report.groups[origin.group] += 1
        if origin.tld:
            report.tlds[origin.tld] += 1
        agent = classify_agent("" if record.user_agent == "-" else record.user_agent)
        report.families[agent.family] += 1
        report.oses[agent.os] += 1
        report.languages[record.language] += 1
        local = record.timestamp.astimezone(zone)
        report.months[local.month] += 1
        report.weekdays[local.weekday()] += 1
        report.hours[local.hour] += 1
    return report


def aggregate(
    lines: Iterable[str],
    utc_offset_minutes: int = 60,
    origin_groups: Optional[Mapping[str, str]] = None,
) -> Report:
    """Aggregate raw log lines; bad lines count as malformed."""
    bad = 0

    def parsed_records():
        nonlocal bad
        for line in lines:
            if not line.strip():
                continue
            try:
                yield RequestRecord.from_line(line)
            except (ValueError, TypeError):
                bad += 1

    report = aggregate_records(parsed_records(), utc_offset_minutes, origin_groups)
    report.total += bad
    report.malformed = bad
    return report


# -- rendering ----------------------------------------------------------------


def _block(title: str, rows: List[Tuple[str, int]], report: Report) -> List[str]:
    lines = [f"{title}"]
    for name, count in rows:
        lines.append(f"  {name:<16} {count:>7} {report.share(count):6.2f}%")
    return lines


def render_text(report: Report) -> str:
    """Fixed-order text tables; identical reports render byte-identically."""
    out: List[str] = [f"{'Requests':<18} {report.total:>7}"]
    if report.malformed:
        out.append(f"  {'malformed':<16} {report.malformed:>7}")
    out += _block(
        "Outcome",
        [(o, report.outcomes.get(o, 0)) for o in OUTCOMES],
        report,
    )
    out += _block(
        "Origin",
        [(g, report.groups.get(g, 0)) for g in GROUPS],
        report,
    )
    top_tlds = sorted(report.tlds.items(), key=lambda kv: (-kv[1], kv[0]))[:10]
    if top_tlds:
        out += _block("Top-level domains", [(f".{t}", c) for t, c in top_tlds], report)
    out += _block(
        "User-Agent family",
        [(f, report.families.get(f, 0)) for f in FAMILIES],
        report,
    )
    out += _block(
        "Operating system",
        [(o, report.oses.get(o, 0)) for o in OSES],
        report,
    )
    langs = sorted(report.languages.items(), key=lambda kv: (-kv[1], kv[0]))
    out += _block("Language", langs, report)
    out += _block(
        "By month",
        [(MONTHS[m - 1], report.months.get(m, 0)) for m in range(1, 13)],
        report,
    )
    out += _block(
        "By weekday",
        [(WEEKDAYS[d], report.weekdays.get(d, 0)) for d in range(7)],
        report,
    )
    out += _block(
        "By hour",
        [(f"{h:02d}", report.hours.get(h, 0)) for h in range(24)],
        report,
    )
    return "\n".join(out) + "\n"


def to_json_dict(report: Report) -> dict:
    return {
        "total": report.total,
        "malformed": report.malformed,
        "outcomes": {o: report.outcomes.get(o, 0) for o in OUTCOMES},
        "origin_groups": {g: report.groups.get(g, 0) for g in GROUPS},
        "tlds": dict(sorted(report.tlds.items())),
        "agent_families": {f: report.families.get(f, 0) for f in FAMILIES},
        "operating_systems": {o: report.oses.get(o, 0) for o in OSES},
        "languages": dict(sorted(report.languages.items())),
        "months": {MONTHS[m - 1]: report.months.get(m, 0) for m in range(1, 13)},
        "weekdays": {WEEKDAYS[d]: report.weekdays.get(d, 0) for d in range(7)},
        "hours": {f"{h:02d}": report.hours.get(h, 0) for h in range(24)},
    }
