# ruff: noqa: E402
from collections.abc import Generator
from contextlib import contextmanager
from typing import Union

__all__ = [
    "Dependencies",
    "deps",
]


class Dependencies:
    """Process-wide access to settings.

    Everything reads settings through here, so tests and CLI flags can swap
    them in one place with `override`.
    """

    def __init__(self) -> None:
        self._base: "Settings | None" = None
        self._overrides: "list[Settings]" = []

    def settings(self) -> "Settings":
        if self._overrides:
            return self._overrides[-1]
        if self._base is None:
            self._base = Settings()
        return self._base

    def _layered(self, partial: "Settings") -> "Settings":
        below = self._overrides[-1].model_dump(exclude_unset=True) if self._overrides else {}
        return Settings(**{**below, **partial.model_dump(exclude_unset=True)})

    @contextmanager
    def override(
        self,
        settings: Union["Settings", None] = None,
        settings_partial: Union["Settings", None] = None,
    ) -> Generator[None, None, None]:
        """Temporarily replace settings, e.g. from CLI flags or in tests.

        `settings_partial` only replaces the fields that were explicitly set on it,
        layered over any override already in force.
        """
        if settings_partial is not None:
            if settings is not None:
                raise ValueError("settings and settings_partial cannot both be set")
            settings = self._layered(settings_partial)
        if settings is None:
            raise ValueError("one of settings and settings_partial is required")

        depth = len(self._overrides)
        self._overrides.append(settings)
        try:
            yield
        finally:
            del self._overrides[depth:]


from btembed.settings import Settings

deps = Dependencies()
