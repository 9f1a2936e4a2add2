import json
import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass, asdict, fields
from typing import Iterator, List, Optional

from .errors import MalformedInput, SearchSpaceTooLarge

logger = logging.getLogger(__name__)

DEFAULT_MAX_ENUM = 1_000_000
ENV_MAX_ENUM = "TOPOSLOS_MAX_ENUM"
REPORT_FORMATS = ("json", "human")


@dataclass
class AppSettings:
    max_enum: int = DEFAULT_MAX_ENUM
    report_format: str = "json"
    last_workspace: Optional[str] = None
    log_level: str = "WARNING"

    def __post_init__(self):
        if not isinstance(self.max_enum, int) or self.max_enum <= 0:
            raise MalformedInput(f"max_enum must be a positive integer, got {self.max_enum!r}")
        if self.report_format not in REPORT_FORMATS:
            raise MalformedInput(f"report_format must be one of {REPORT_FORMATS}")


class SettingsManager:
    def __init__(self, settings_file="settings.json", settings_dir=None):
        self.settings_file = os.path.join(
            settings_dir or os.path.join(os.path.expanduser("~"), ".toposlos"),
            settings_file
        )
        self.settings = self.load_settings()

    def load_settings(self) -> AppSettings:
        try:
            if os.path.exists(self.settings_file):
                with open(self.settings_file, 'r') as f:
                    data = json.load(f)
                known = {f.name for f in fields(AppSettings)}
                return AppSettings(**{k: v for k, v in data.items() if k in known})
        except Exception as e:
            logger.warning("Error loading settings from %s: %s", self.settings_file, e)
        return AppSettings()

    def save_settings(self):
        try:
            os.makedirs(os.path.dirname(self.settings_file), exist_ok=True)
            with open(self.settings_file, 'w') as f:
                json.dump(asdict(self.settings), f, indent=4)
        except Exception as e:
            logger.warning("Error saving settings to %s: %s", self.settings_file, e)

    def update_settings(self, **kwargs):
        for key, value in kwargs.items():
            if hasattr(self.settings, key):
                setattr(self.settings, key, value)
        self.save_settings()


# Bounds pushed by bounded(); the innermost one wins.
_bound_stack: List[int] = []


def enum_bound() -> int:
    """Active enumeration bound: innermost bounded() scope, then the environment, then the default"""
    if _bound_stack:
        return _bound_stack[-1]
    raw = os.environ.get(ENV_MAX_ENUM)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise MalformedInput(f"{ENV_MAX_ENUM} must be an integer, got {raw!r}")
        if value <= 0:
            raise MalformedInput(f"{ENV_MAX_ENUM} must be positive, got {value}")
        return value
    return DEFAULT_MAX_ENUM


@contextmanager
def bounded(limit: int) -> Iterator[int]:
    """Scope a different enumeration bound"""
    if limit <= 0:
        raise MalformedInput(f"enumeration bound must be positive, got {limit}")
    _bound_stack.append(limit)
    try:
        yield limit
    finally:
        _bound_stack.pop()


def guard(count: int, what: str) -> None:
    """Refuse an enumeration whose cardinality exceeds the active bound"""
    limit = enum_bound()
    if count > limit:
        raise SearchSpaceTooLarge(
            f"enumerating {what} needs {count} candidates, bound is {limit}",
            count=count, bound=limit, what=what,
        )
