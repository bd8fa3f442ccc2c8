"""Rule-based normalization of Italian date expressions to ISO-8601 intervals."""

from __future__ import annotations

import calendar
import re
from datetime import date

MONTHS = {
    "gennaio": 1, "febbraio": 2, "marzo": 3, "aprile": 4, "maggio": 5, "giugno": 6,
    "luglio": 7, "agosto": 8, "settembre": 9, "ottobre": 10, "novembre": 11, "dicembre": 12,
}
_MONTH = "(" + "|".join(MONTHS) + ")"
_DAY = r"(\d{1,2}|primo|1°|1º)"
_YEAR = r"(1[0-9]{3}|20[0-9]{2})"

_DAY_MONTH_YEAR = re.compile(rf"\b{_DAY}\s+{_MONTH}(?:\s+(?:del\s+)?{_YEAR})\b")
_MONTH_YEAR = re.compile(rf"\b{_MONTH}\s+(?:del\s+)?{_YEAR}\b")
_NUMERIC = re.compile(r"\b(\d{1,2})[/.-](\d{1,2})[/.-](\d{4})\b")
_ISO = re.compile(r"^(\d{4})(?:-(\d{2})(?:-(\d{2}))?)?$")
_YEAR_ONLY = re.compile(rf"\b{_YEAR}\b")


def _day(text: str) -> int:
    return 1 if text in ("primo", "1°", "1º") else int(text)


def _iso(y, m=None, d=None) -> str | None:
    try:
        if d is not None:
            return date(y, m, d).isoformat()
    except ValueError:
        return None
    if m is not None:
        return f"{y:04d}-{m:02d}" if 1 <= m <= 12 else None
    return f"{y:04d}"


def normalize_date(text: str) -> str | None:
    """ISO date at day, month or year granularity, or None when no rule applies."""
    t = " ".join(text.lower().replace("'", " ").split())
    m = _ISO.match(t)
    if m:
        y, mo, d = m.groups()
        return _iso(int(y), int(mo) if mo else None, int(d) if d else None)
    m = _DAY_MONTH_YEAR.search(t)
    if m:
        return _iso(int(m.group(3)), MONTHS[m.group(2)], _day(m.group(1)))
    m = _NUMERIC.search(t)
    if m:
        return _iso(int(m.group(3)), int(m.group(2)), int(m.group(1)))
    m = _MONTH_YEAR.search(t)
    if m:
        return _iso(int(m.group(2)), MONTHS[m.group(1)])
    m = _YEAR_ONLY.search(t)
    if m and len(_YEAR_ONLY.findall(t)) == 1 and not re.search(r"\d", _YEAR_ONLY.sub("", t)):
        return _iso(int(m.group(1)))
    return None


def interval(iso: str) -> tuple[date, date]:
    """Closed day interval covered by an ISO date of any granularity."""
    m = _ISO.match(iso)
    if not m:
        raise ValueError(f"not an ISO date: {iso!r}")
    y, mo, d = m.groups()
    y = int(y)
    if d:
        day = date(y, int(mo), int(d))
        return day, day
    if mo:
        mo = int(mo)
        return date(y, mo, 1), date(y, mo, calendar.monthrange(y, mo)[1])
    return date(y, 1, 1), date(y, 12, 31)


def intersects(iso: str, start: date, end: date) -> bool:
    lo, hi = interval(iso)
    return lo <= end and start <= hi
