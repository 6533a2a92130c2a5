"""Application configuration using Pydantic Settings and validated run files."""

import json
from pathlib import Path
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import MriskError


class ConfigError(MriskError):
    """Run configuration is missing, unreadable or invalid."""
    pass


class Settings(BaseSettings):
    """Process-wide settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="MRISK_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # Audit actor
    user: str = Field("anonymous", description="Actor recorded in the audit log")

    # Logging
    log_level: str = Field("INFO", description="Logging level")
    log_file: Optional[str] = Field(None, description="Optional log file path")

    # Execution
    threads: int = Field(1, ge=1, description="Maximum pricing threads")
    hedge_warn_paths: int = Field(10_000, description="World-path count above which hedging warns")
    out_dir: str = Field("out", description="Default output directory")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Normalise the level name."""
        v = v.strip().upper()
        if v not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Unknown log level: {v}")
        return v


# Global settings instance
settings = Settings()


# ============== Run configuration sections ==============

FVA_METHODS = (
    "parameter_range",
    "sensitivity_multiple",
    "model_comparison",
    "calibration_variation",
    "hedging_simulation",
    "conservative_set",
)


class ModelSection(BaseModel):
    """Model selection: LV or HWLV with its Hull-White parameters."""

    kind: Literal["LV", "HWLV"] = "LV"
    model_id: Optional[str] = None
    mean_reversion: float = Field(0.05, gt=0)
    rate_vol: float = Field(0.008, ge=0)
    correlation: Optional[float] = Field(None, ge=-1.0, le=1.0)
    leverage_mode: Literal["recalibrated", "reuse"] = "recalibrated"


class McSection(BaseModel):
    """Monte Carlo settings. The seed is mandatory."""

    n_paths: int = Field(20_000, ge=2)
    steps_per_year: int = Field(48, ge=12)
    seed: int = Field(..., ge=0, lt=2**64)
    antithetic: bool = True


class GridSection(BaseModel):
    """Tenor x correlation grid for model comparison."""

    tenors: List[float] = Field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0, 5.0])
    correlations: List[float] = Field(default_factory=lambda: [-0.3, 0.0, 0.3, 0.6])

    @field_validator("tenors")
    @classmethod
    def validate_tenors(cls, v: List[float]) -> List[float]:
        if not v or any(t <= 0 for t in v):
            raise ValueError("grid tenors must be non-empty and positive")
        return v

    @field_validator("correlations")
    @classmethod
    def validate_correlations(cls, v: List[float]) -> List[float]:
        if not v or any(abs(c) > 1.0 for c in v):
            raise ValueError("grid correlations must be non-empty and within [-1, 1]")
        return v


class VariantSection(BaseModel):
    """One calibration variant: another snapshot and/or parameter overrides."""

    snapshot: Optional[Path] = None
    overrides: Dict[str, float] = Field(default_factory=dict)


class FvaMethodSection(BaseModel):
    """Settings of a single FVA method run."""

    method: str
    param: Optional[str] = None
    samples: Optional[List[float]] = None
    samples_file: Optional[Path] = None
    p_lo: float = Field(0.05, ge=0.0, le=1.0)
    p_hi: float = Field(0.95, ge=0.0, le=1.0)
    multiple: float = Field(1.0, ge=0.0)
    bump: Optional[float] = Field(None, gt=0.0)
    unit_move: Optional[float] = Field(None, gt=0.0)
    alternative: Optional[ModelSection] = None
    variants: List[VariantSection] = Field(default_factory=list)
    values: Optional[List[float]] = None
    mode: Literal["external", "embedded"] = "external"

    @field_validator("method")
    @classmethod
    def validate_method(cls, v: str) -> str:
        if v not in FVA_METHODS:
            raise ValueError(f"Unknown FVA method: {v}")
        return v

    @model_validator(mode="after")
    def validate_percentiles(self) -> "FvaMethodSection":
        if self.p_lo >= self.p_hi:
            raise ValueError("p_lo must be strictly below p_hi")
        return self


class FvaSection(BaseModel):
    """FVA policy: methods, position side, kappa and comparison grid."""

    methods: List[FvaMethodSection] = Field(default_factory=list)
    position: Literal["long", "short"] = "long"
    kappa: float = Field(1.0, ge=0.0)
    grid: GridSection = Field(default_factory=GridSection)


class HedgeSection(BaseModel):
    """Hedging-simulation settings."""

    realized_model: Optional[ModelSection] = None
    realized_snapshot: Optional[Path] = None
    rebalance_every_step: bool = True
    world_paths: int = Field(5_000, ge=2)
    steps_per_year: int = Field(252, ge=12)
    inner_paths: int = Field(2_000, ge=2)
    ladder_size: int = Field(41, ge=5)
    delta_refresh_per_year: Optional[int] = Field(None, ge=1)
    position: Literal["long", "short"] = "short"
    kappa: Optional[float] = Field(None, ge=0.0)


class GovernanceSection(BaseModel):
    """Inventory store wiring."""

    store: Optional[Path] = None
    audit_log: Optional[Path] = None
    product_family: Optional[str] = None
    enforce_limits: bool = False


class RunConfig(BaseModel):
    """A complete, self-describing run of one CLI command."""

    snapshot: Path
    product: Optional[Path] = None
    model: ModelSection = Field(default_factory=ModelSection)
    mc: McSection
    fva: FvaSection = Field(default_factory=FvaSection)
    hedge: HedgeSection = Field(default_factory=HedgeSection)
    governance: GovernanceSection = Field(default_factory=GovernanceSection)
    out_dir: Optional[Path] = None
    threads: Optional[int] = Field(None, ge=1)

    @classmethod
    def load(cls, path: Path) -> "RunConfig":
        """
        Load and validate a run configuration file.

        Relative paths inside the file resolve against the file's directory.

        Raises:
            ConfigError: On a missing file, bad JSON or failed validation
        """
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Config file not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file is not valid JSON: {path}: {e}")
        try:
            config = cls.model_validate(raw)
        except ValidationError as e:
            raise ConfigError(f"Invalid config {path}: {e}")
        return config.resolve_paths(path.parent)

    def resolve_paths(self, base: Path) -> "RunConfig":
        """Return a copy with every relative path anchored at ``base``."""

        def anchor(p: Optional[Path]) -> Optional[Path]:
            if p is None or p.is_absolute():
                return p
            return base / p

        data = self.model_copy(deep=True)
        data.snapshot = anchor(data.snapshot)
        data.product = anchor(data.product)
        data.out_dir = anchor(data.out_dir)
        data.governance.store = anchor(data.governance.store)
        data.governance.audit_log = anchor(data.governance.audit_log)
        data.hedge.realized_snapshot = anchor(data.hedge.realized_snapshot)
        for method in data.fva.methods:
            method.samples_file = anchor(method.samples_file)
            for variant in method.variants:
                variant.snapshot = anchor(variant.snapshot)
        return data
