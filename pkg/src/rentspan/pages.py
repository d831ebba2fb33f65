"""Self-contained HTML pages: result, error page, questionnaire and clones.

The markup is deliberately plain mid-90s HTML, no scripts or styles, so a
page works in any browser and can be cut up and reused.  A machine-readable
comment of the form ``<!-- RENT lo hi -->`` (canonical dot decimals) is
embedded in every result page so scripted clients need not scrape the
localized text.
"""

from __future__ import annotations

import html
from typing import Dict, List, Mapping, Optional, Sequence

from .formcodec import FieldSpec, FormSyntaxError, bind_fields, build_schema
from .model import RentEstimate, format_amount
from .ruleset import Ruleset

_STRINGS: Dict[str, Dict[str, str]] = {
    "de": {
        "result_title": "Mietschätzung",
        "headline": "Die geschätzte monatliche Miete liegt zwischen {lo} {cur} und {hi} {cur}.",
        "breakdown": "Aufschlüsselung",
        "size": "Wohnfläche (m²)",
        "base_rate": "Grundmiete je m²",
        "deviation": "Summe der Abweichungen (%)",
        "imprecision": "Unschärfe des Modells (%)",
        "fixed": "Nebenkosten",
        "warnings": "Hinweise",
        "incomplete": "Schätzung aus unvollständigen Angaben: das Intervall deckt alle Vervollständigungen ab.",
        "error_title": "Fehlerhafte Anfrage",
        "error_intro": "Ihre Anfrage konnte nicht ausgewertet werden. Typische Fehler:",
        "error_hints": (
            "Zahlenfelder brauchen ganze Zahlen (keine Kommazahlen).",
            "Das Minimum darf das Maximum nicht übersteigen.",
            "Werte müssen innerhalb der zulässigen Bereiche liegen (Größe 22–160 m², Baujahr 1800–1992).",
            "Bitte benutzen Sie das Formular unverändert noch einmal.",
        ),
        "form_title": "Mietspiegel-Fragebogen",
        "submit": "Abschicken",
        "yes": "Ja",
        "no": "Nein",
        "dontknow": "Weiß nicht",
        "at_least": "mindestens",
        "at_most": "höchstens",
        "no_district": "(keine Angabe)",
        "section_basic": "I. Grundfragen",
        "section_district": "II. Stadtviertel",
        "section_house": "III. Fragen zum Haus",
        "section_flat": "IV. Fragen zur Wohnung",
        "section_fixed": "V. Nebenkosten (DM je Monat)",
        "applies": "fällt an?",
    },
    "en": {
        "result_title": "Rent estimate",
        "headline": "The estimated monthly rent lies between {lo} {cur} and {hi} {cur}.",
        "breakdown": "Breakdown",
        "size": "Flat size (m²)",
        "base_rate": "Base rent per m²",
        "deviation": "Sum of deviations (%)",
        "imprecision": "Model imprecision (%)",
        "fixed": "Fixed costs",
        "warnings": "Notes",
        "incomplete": "This is an estimate from incomplete answers: the interval covers every completion.",
        "error_title": "Request failed",
        "error_intro": "Your request could not be processed. Typical errors:",
        "error_hints": (
            "Numeric fields need whole numbers (no decimal fractions).",
            "A minimum must not exceed its maximum.",
            "Values must stay within the allowed ranges (size 22-160 m², year 1800-1992).",
            "Please try again with an unmodified form.",
        ),
        "form_title": "Rent questionnaire",
        "submit": "Submit",
        "yes": "Yes",
        "no": "No",
        "dontknow": "Don't know",
        "at_least": "at least",
        "at_most": "not more than",
        "no_district": "(no answer)",
        "section_basic": "I. Basic Questions",
        "section_district": "II. District",
        "section_house": "III. Questions about the House",
        "section_flat": "IV. Questions about the Flat",
        "section_fixed": "V. Fixed costs (DM per month)",
        "applies": "applies?",
    },
}

# presentation labels for the sample questionnaire; unknown ids fall back to the id
_QUESTION_LABELS: Dict[str, Dict[str, str]] = {
    "BackPremises": {
        "en": "Do you live in the back premises?",
        "de": "Wohnen Sie im Rückgebäude?",
    },
    "GoodImpression": {
        "en": "Would you say your house looks good? E.g. old-fashioned windows, fancy balconies.",
        "de": "Macht Ihr Haus einen gepflegten Eindruck? Z.B. alte Fenster, schöne Balkone.",
    },
    "Lift": {"en": "Is there a lift?", "de": "Gibt es einen Aufzug?"},
    "ManyStoreys": {
        "en": "Does the house have more than four storeys?",
        "de": "Hat das Haus mehr als vier Stockwerke?",
    },
    "QuietLocation": {
        "en": "Is the house in a quiet location?",
        "de": "Liegt das Haus in ruhiger Lage?",
    },
    "CommercialUse": {
        "en": "Are there shops or offices in the house?",
        "de": "Gibt es Läden oder Büros im Haus?",
    },
    "CentralHeating": {"en": "Is there central heating?", "de": "Gibt es eine Zentralheizung?"},
    "SeparateShower": {"en": "Is there a separate shower?", "de": "Gibt es eine separate Dusche?"},
    "Dishwasher": {"en": "Is there a dishwasher?", "de": "Gibt es eine Spülmaschine?"},
    "ModernKitchen": {"en": "Is the kitchen modern?", "de": "Ist die Küche modern ausgestattet?"},
    "TiledBath": {"en": "Is the bathroom tiled?", "de": "Ist das Bad gefliest?"},
    "Balcony": {"en": "Is there a balcony?", "de": "Gibt es einen Balkon?"},
    "QualityFlooring": {"en": "Is there quality flooring?", "de": "Gibt es hochwertige Böden?"},
    "SoundInsulation": {"en": "Is there sound insulation?", "de": "Gibt es Schallschutz?"},
    "ThermalInsulation": {"en": "Is there thermal insulation?", "de": "Gibt es Wärmedämmung?"},
    "StorageRoom": {"en": "Is there a storage room?", "de": "Gibt es einen Abstellraum?"},
    "SecondToilet": {"en": "Is there a second toilet?", "de": "Gibt es eine zweite Toilette?"},
    "NoBathroom": {"en": "Is the flat without a bathroom?", "de": "Ist die Wohnung ohne Bad?"},
    "SingleGlazing": {"en": "Are the windows single-glazed?", "de": "Sind die Fenster einfach verglast?"},
    "CommunityTaxes": {"en": "Community taxes", "de": "Kommunale Abgaben"},
    "GarbageCollection": {"en": "Garbage collection", "de": "Müllabfuhr"},
    "HouseCleaning": {"en": "House cleaning", "de": "Hausreinigung"},
    "CableTV": {"en": "Cable TV", "de": "Kabelanschluss"},
    "size": {
        "en": "What is the size of your flat (in square meters)?",
        "de": "Wie groß ist Ihre Wohnung (in Quadratmetern)?",
    },
    "rooms": {"en": "How many rooms has your flat?", "de": "Wie viele Zimmer hat Ihre Wohnung?"},
    "year": {
        "en": "In which year was your house built?",
        "de": "In welchem Jahr wurde Ihr Haus gebaut?",
    },
    "district": {
        "en": "Please choose the district you live in from the list.",
        "de": "Bitte wählen Sie Ihr Stadtviertel aus der Liste.",
    },
}


def normalize_lang(language: str) -> str:
    return "en" if language.strip().lower() in ("english", "en") else "de"


def _label(key: str, lang: str) -> str:
    entry = _QUESTION_LABELS.get(key)
    return entry[lang] if entry else key


def _page(title: str, body: str) -> str:
    return (
        "<HTML>\n<HEAD>\n<TITLE>" + html.escape(title) + "</TITLE>\n</HEAD>\n<BODY>\n"
        + body
        + "\n</BODY>\n</HTML>\n"
    )


def _amount_range(iv, lang: str, places: int = 2) -> str:
    a = format_amount(iv.lo, lang, places)
    b = format_amount(iv.hi, lang, places)
    return a if iv.is_singleton else f"{a} .. {b}"


def rent_line(est: RentEstimate, language: str = "German") -> str:
    """One localized sentence stating the estimated rent interval."""
    lang = normalize_lang(language)
    s = _STRINGS[lang]
    lo = format_amount(est.rent.lo, lang)
    hi = format_amount(est.rent.hi, lang)
    return s["headline"].format(lo=lo, hi=hi, cur="DM")


def breakdown_rows(est: RentEstimate, language: str = "German") -> List[tuple]:
    """Localized (label, formatted value) pairs for the per-factor table."""
    lang = normalize_lang(language)
    s = _STRINGS[lang]
    b = est.breakdown
    return [
        (s["size"], _amount_range(b.size, lang, 0)),
        (s["base_rate"], _amount_range(b.base_rate, lang)),
        (s["deviation"], _amount_range(b.deviation_sum, lang, 1)),
        (s["imprecision"], _amount_range(b.imprecision, lang, 1)),
        (s["fixed"], _amount_range(b.fixed_costs, lang)),
    ]


def localized_warnings(warnings: Sequence[str], language: str = "German") -> List[str]:
    lang = normalize_lang(language)
    s = _STRINGS[lang]
    return [
        s["incomplete"] if w.startswith("incomplete answers") else w
        for w in warnings
    ]


def render_result(est: RentEstimate, language: str = "German",
                  extra_warnings: Sequence[str] = ()) -> str:
    """Result page: headline interval, per-factor breakdown, notes."""
    lang = normalize_lang(language)
    s = _STRINGS[lang]
    lo = format_amount(est.rent.lo, lang)
    hi = format_amount(est.rent.hi, lang)
    machine = f"<!-- RENT {format_amount(est.rent.lo, 'en')} {format_amount(est.rent.hi, 'en')} -->"

    rows = breakdown_rows(est, language)
    table = "\n".join(
        f"<TR><TD>{html.escape(name)}</TD><TD ALIGN=RIGHT>{html.escape(val)}</TD></TR>"
        for name, val in rows
    )

    notes = localized_warnings(list(est.warnings) + list(extra_warnings), language)
    notes_html = ""
    if notes:
        items = "\n".join(f"<LI>{html.escape(n)}</LI>" for n in notes)
        notes_html = f"<H2>{s['warnings']}</H2>\n<UL>\n{items}\n</UL>\n"

    body = (
        f"{machine}\n<H1>{s['result_title']}</H1>\n"
        + f"<P>{s['headline'].format(lo=f'<B>{lo}</B>', hi=f'<B>{hi}</B>', cur='DM')}</P>\n"
        + f"<H2>{s['breakdown']}</H2>\n<TABLE BORDER=1>\n{table}\n</TABLE>\n"
        + notes_html
    )
    return _page(s["result_title"], body)


def render_error(language: str = "German", detail: Optional[str] = None) -> str:
    """The generic error page with hints about typical input mistakes."""
    lang = normalize_lang(language)
    s = _STRINGS[lang]
    hints = "\n".join(f"<LI>{html.escape(h)}</LI>" for h in s["error_hints"])
    detail_html = f"<P><SMALL>{html.escape(detail)}</SMALL></P>\n" if detail else ""
    body = (
        f"<H1>{s['error_title']}</H1>\n<P>{s['error_intro']}</P>\n"
        f"<UL>\n{hints}\n</UL>\n{detail_html}"
    )
    return _page(s["error_title"], body)


# -- questionnaire and clones --------------------------------------------------


def _tristate_row(name: str, label: str, s: Mapping[str, str]) -> str:
    return (
        f"<P>{html.escape(label)}<BR>\n"
        f'<INPUT TYPE="radio" NAME="{name}" VALUE="Yes"> {s["yes"]}\n'
        f'<INPUT TYPE="radio" NAME="{name}" VALUE="No"> {s["no"]}\n'
        f'<INPUT TYPE="radio" NAME="{name}" VALUE="?" CHECKED> {s["dontknow"]}</P>'
    )


def _pair_row(spec_min: FieldSpec, label: str, s: Mapping[str, str], size: int) -> str:
    lo, hi = spec_min.bounds.lo, spec_min.bounds.hi
    return (
        f"<P>{html.escape(label)}<BR>\n"
        f'{s["at_least"]} <INPUT NAME="{spec_min.name}" SIZE={size} MAXLENGTH={size} VALUE="{lo}">\n'
        f'{s["at_most"]} <INPUT NAME="{spec_min.partner}" SIZE={size} MAXLENGTH={size} VALUE="{hi}"></P>'
    )


def _district_row(spec: FieldSpec, label: str, s: Mapping[str, str]) -> str:
    options = [f'<OPTION VALUE="">{s["no_district"]}</OPTION>'] + [
        f'<OPTION VALUE="{html.escape(name, quote=True)}">{html.escape(name)}</OPTION>'
        for name in spec.choices
    ]
    return (
        f"<P>{html.escape(label)}<BR>\n<SELECT NAME=\"{spec.name}\">\n"
        + "\n".join(options)
        + "\n</SELECT></P>"
    )


def clone_form(
    rs: Ruleset,
    subset: Optional[Sequence[str]] = None,
    fixed: Optional[Mapping[str, str]] = None,
    action: str = "http://localhost:4322",
    language: str = "German",
) -> str:
    """A standalone form page posting to ``action``.

    ``subset`` selects the visible fields (None means the full
    questionnaire, an empty list the minimal clone: a lone submit button);
    ``fixed`` values are validated and embedded as hidden fields.  The
    server treats every omitted field as unanswered, so any clone still
    produces an estimate.
    """
    lang = normalize_lang(language)
    s = _STRINGS[lang]
    schema = build_schema(rs)
    by_name = {spec.name: spec for spec in schema}

    full = subset is None
    chosen = set(schema_field_names(rs) if full else subset)
    unknown = chosen - set(by_name)
    if unknown:
        raise ValueError(f"unknown form fields: {', '.join(sorted(unknown))}")

    fixed = dict(fixed or {})
    unknown = set(fixed) - set(by_name)
    if unknown:
        raise ValueError(f"unknown fixed fields: {', '.join(sorted(unknown))}")
    if fixed:
        # one parsing path: hidden values must survive the same binding
        bind_fields(sorted(fixed.items()), schema, rs)

    rows: List[str] = []
    sections_emitted = set()

    def section(key: str) -> None:
        if full and key not in sections_emitted:
            sections_emitted.add(key)
            rows.append(f"<H2>{s[key]}</H2>")

    for spec in schema:
        if spec.name in fixed or spec.name not in chosen:
            continue
        if spec.kind == "language":
            continue  # language is selected per page, see below
        if spec.kind == "int_min":
            section("section_basic")
            size = max(len(str(spec.bounds.lo)), len(str(spec.bounds.hi)))
            rows.append(_pair_row(spec, _label(spec.dim, lang), s, size))
        elif spec.kind == "district":
            section("section_district")
            rows.append(_district_row(spec, _label("district", lang), s))
        elif spec.kind == "tristate":
            section("section_house" if spec.flag_group == "house" else "section_flat")
            rows.append(_tristate_row(spec.name, _label(spec.flag_id, lang), s))
        elif spec.kind == "money_min":
            section("section_fixed")
            rows.append(_pair_row(spec, _label(spec.item_id, lang), s, 6))
        elif spec.kind == "applies":
            if f"FC_{spec.item_id}_min" in chosen:
                rows.append(_tristate_row(spec.name, s["applies"], s))

    hidden = [
        f'<INPUT TYPE="hidden" NAME="{html.escape(n, quote=True)}" VALUE="{html.escape(v, quote=True)}">'
        for n, v in fixed.items()
    ]
    # the full questionnaire pins its language; clones stay minimal
    if full and "Language" not in fixed:
        hidden.append(
            f'<INPUT TYPE="hidden" NAME="Language" VALUE="{"English" if lang == "en" else "German"}">'
        )

    parts = [f'<FORM METHOD="POST" ACTION="{html.escape(action, quote=True)}">']
    if full:
        parts.append(f"<H1>{s['form_title']}</H1>")
    parts.extend(hidden)
    parts.extend(rows)
    parts.append(f'<P><INPUT TYPE="submit" VALUE="{s["submit"]}"></P>\n</FORM>')
    return _page(s["form_title"], "\n".join(parts))


def schema_field_names(rs: Ruleset) -> List[str]:
    return [spec.name for spec in build_schema(rs)]


def form_page(rs: Ruleset, action: str = "", language: str = "German") -> str:
    """The complete questionnaire (every field, with section headers)."""
    return clone_form(rs, subset=None, action=action or "/", language=language)
