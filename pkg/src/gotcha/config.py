"""Run configuration shared by training, evaluation, the CLI, and the service."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .errors import ConfigError
from .witness import DEFAULT_PROPORTIONS, MODES, DisclosureSchedule, default_schedule


@dataclass
class TrainConfig:
    """Dialog and optimization settings.

    ``schedule`` is the masked-proportion list, one entry per round; None
    derives the standard schedule for the configured round count.
    ``hidden_dim`` defaults to the gallery's feature dimension.
    """

    rounds: int = 5
    margin: float = 2.0
    lr: float = 0.001
    k: int = 10
    batch_size: int = 32
    epochs: int = 10
    episodes_per_epoch: int | None = None
    seed: int = 0
    mode: str = "progressive"
    schedule: tuple | None = None
    hidden_dim: int | None = None
    exclude_shown: bool = True
    resample_mask: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.margin < 0:
            raise ConfigError("margin must be >= 0")
        if self.lr <= 0:
            raise ConfigError("learning rate must be > 0")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.episodes_per_epoch is not None and self.episodes_per_epoch < 1:
            raise ConfigError("episodes per epoch must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.schedule is not None:
            self.schedule = tuple(float(v) for v in self.schedule)
            if len(self.schedule) != self.rounds:
                raise ConfigError(
                    f"schedule has {len(self.schedule)} entries for "
                    f"{self.rounds} rounds"
                )
            DisclosureSchedule(self.schedule)
        if self.hidden_dim is not None and self.hidden_dim < 1:
            raise ConfigError("hidden_dim must be >= 1")

    def disclosure_schedule(self) -> DisclosureSchedule:
        if self.schedule is None:
            return default_schedule(self.rounds)
        return DisclosureSchedule(self.schedule)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schedule"] = list(self.disclosure_schedule().proportions)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})


def parse_schedule(text: str) -> tuple:
    """Parse a comma-separated fraction list like ``0.5,0.3,0.2,0.1,0.0``."""
    try:
        values = tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad schedule {text!r}: {exc}") from exc
    DisclosureSchedule(values)
    return values
