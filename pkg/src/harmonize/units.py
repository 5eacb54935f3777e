"""Built-in unit catalog for the unit-conversion primitive.

Every unit maps to its dimension's base unit through ``base = a * x + b``;
the offset ``b`` is non-zero only for temperatures.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DimensionMismatch, InvalidParams


@dataclass(frozen=True)
class Unit:
    symbol: str
    dimension: str
    scale: float
    offset: float = 0.0


_F_SCALE = 5.0 / 9.0

UNITS: dict[str, Unit] = {
    u.symbol: u
    for u in (
        # length, base metre
        Unit("mm", "length", 0.001),
        Unit("cm", "length", 0.01),
        Unit("m", "length", 1.0),
        Unit("km", "length", 1000.0),
        Unit("inch", "length", 0.0254),
        Unit("foot", "length", 0.3048),
        Unit("yard", "length", 0.9144),
        Unit("mile", "length", 1609.344),
        # mass, base kilogram
        Unit("g", "mass", 0.001),
        Unit("kg", "mass", 1.0),
        Unit("lb", "mass", 0.45359237),
        Unit("oz", "mass", 0.028349523125),
        # time, base second
        Unit("s", "time", 1.0),
        Unit("min", "time", 60.0),
        Unit("h", "time", 3600.0),
        Unit("day", "time", 86400.0),
        # temperature, base kelvin
        Unit("celsius", "temperature", 1.0, 273.15),
        Unit("fahrenheit", "temperature", _F_SCALE, 273.15 - 32.0 * _F_SCALE),
        Unit("kelvin", "temperature", 1.0, 0.0),
    )
}

ALIASES = {
    "millimeter": "mm", "millimeters": "mm", "millimetre": "mm", "millimetres": "mm",
    "centimeter": "cm", "centimeters": "cm", "centimetre": "cm", "centimetres": "cm",
    "meter": "m", "meters": "m", "metre": "m", "metres": "m",
    "kilometer": "km", "kilometers": "km", "kilometre": "km", "kilometres": "km",
    "in": "inch", "inches": "inch",
    "ft": "foot", "feet": "foot",
    "yd": "yard", "yards": "yard",
    "mi": "mile", "miles": "mile",
    "gram": "g", "grams": "g",
    "kilogram": "kg", "kilograms": "kg",
    "pound": "lb", "pounds": "lb", "lbs": "lb",
    "ounce": "oz", "ounces": "oz",
    "second": "s", "seconds": "s", "sec": "s",
    "minute": "min", "minutes": "min",
    "hour": "h", "hours": "h", "hr": "h",
    "days": "day",
    "c": "celsius", "degc": "celsius",
    "f": "fahrenheit", "degf": "fahrenheit",
    "k": "kelvin",
}


def resolve(name: str) -> Unit:
    """Look up a unit by symbol or spelled-out alias (case-insensitive)."""
    if not isinstance(name, str):
        raise InvalidParams(f"unit must be a string, got {name!r}")
    key = name.strip().lower()
    key = ALIASES.get(key, key)
    try:
        return UNITS[key]
    except KeyError:
        raise InvalidParams(f"unsupported unit {name!r}") from None


def check_convertible(source: Unit, target: Unit) -> None:
    if source.dimension != target.dimension:
        raise DimensionMismatch(
            f"cannot convert {source.symbol} ({source.dimension}) to {target.symbol} ({target.dimension})"
        )


def convert(x: float, source: Unit, target: Unit) -> float:
    check_convertible(source, target)
    return (source.scale * x + source.offset - target.offset) / target.scale
