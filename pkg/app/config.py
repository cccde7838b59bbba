import tomllib
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Type

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict, TomlConfigSettingsSource, PydanticBaseSettingsSource

from app.errors import ConfigurationError


class ModelSettings(BaseModel):
    """模型配置

    rotated-log: V(x) = a·log(1 + b x²)，a > 0，Re b > 0
    quadratic:   V(x) = (a + ib) x²，即谐振子势 (a+ib)/2·(x²+y²)，b 取实数
    custom:      V(x) = Σ c_k x^k，k 从 2 开始
    """
    model_config = ConfigDict(extra="forbid")

    kind: Literal["quadratic", "rotated-log", "custom"] = Field(default="rotated-log")
    a: float = Field(default=2.0, gt=0)
    b: complex = Field(default=1.0)
    coefficients: List[complex] = Field(default_factory=list, description="custom 势的系数 c₂, c₃, …")
    # None 表示由 V″(0) 求解旋转角
    zeta_angle: Optional[float] = Field(default=None, description="arg ζ，弧度")
    W: float = Field(default=16.0, gt=0)
    W_list: List[float] = Field(default_factory=lambda: [8.0, 16.0, 32.0, 64.0])
    growth_exponent: float = Field(default=2.0, gt=1)
    strip_halfwidth: float = Field(default=1.0, gt=0, description="多项式势的解析带半宽")
    half_length: Optional[float] = Field(default=None, gt=0, description="固定截断长度 L，缺省时自动选择")

    @field_validator("W_list")
    @classmethod
    def _check_w_list(cls, value: List[float]) -> List[float]:
        if len(value) < 4:
            raise ValueError("W_list 至少需要 4 个取值")
        if any(w <= 0 for w in value):
            raise ValueError("W_list 中的取值必须为正")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("W_list 必须严格递增")
        return value

    @model_validator(mode="after")
    def _check_kind(self) -> "ModelSettings":
        if self.kind == "rotated-log" and self.b.real <= 0:
            raise ValueError("rotated-log 势要求 Re b > 0")
        if self.kind == "quadratic" and self.b.imag != 0:
            raise ValueError("quadratic 势的 b 必须为实数")
        if self.kind == "custom" and not self.coefficients:
            raise ValueError("custom 势需要给出 coefficients")
        return self


class SolverSettings(BaseModel):
    """数值求解配置"""
    model_config = ConfigDict(extra="forbid")

    tol: float = Field(default=1e-10, gt=0, le=1e-2, description="特征值相对容差")
    resolution_tol: float = Field(default=1e-10, gt=0, le=1e-2, description="auto_resolution 的截断容差")
    max_iters: int = Field(default=20000, ge=1)
    seed: int = Field(default=0, ge=0)
    threads: int = Field(default=1, ge=1, description="并发工作线程数")
    trials: int = Field(default=8, ge=1, description="半群衰减的随机试验次数")
    semigroup_steps: int = Field(default=200, ge=10)
    max_half_length: float = Field(default=40.0, gt=0)
    singular_k: int = Field(default=6, ge=1, le=10)


class SamplingSettings(BaseModel):
    """假设检查的抽样密度"""
    model_config = ConfigDict(extra="forbid")

    real_points: int = Field(default=400, ge=10)
    strip_lines: int = Field(default=5, ge=1)
    extent: float = Field(default=10.0, gt=0)
    sector_rays: int = Field(default=5, ge=2)
    # U4 中 |U′|/max(1, Re U)^γ 超过此值视为不通过
    u4_ceiling: float = Field(default=1e6, gt=0)


class ExperimentSettings(BaseModel):
    """实验配置（各子命令按需读取）"""
    model_config = ConfigDict(extra="forbid")

    j_max: int = Field(default=5, ge=0, le=9)
    n_max: int = Field(default=40, ge=5)
    M: int = Field(default=30, ge=0)
    N: int = Field(default=30, ge=0)
    burn_in: int = Field(default=3, ge=0)
    periodic_length: int = Field(default=60, ge=1)
    observables: List[str] = Field(default_factory=lambda: ["one", "log-moment"])
    F: str = Field(default="x", description="rotated-log 势下须满足 F2：增长阶 < 2a − 1")
    G: str = Field(default="x")
    sampling: SamplingSettings = Field(default_factory=SamplingSettings)

    @model_validator(mode="after")
    def _check_observables(self) -> "ExperimentSettings":
        from app.services.observables import OBSERVABLES

        for name in [*self.observables, self.F, self.G]:
            if name not in OBSERVABLES:
                raise ValueError(f"未知的观测量: {name}，可选: {sorted(OBSERVABLES)}")
        if self.burn_in >= self.n_max:
            raise ValueError("burn_in 必须小于 n_max")
        return self


class OutputSettings(BaseModel):
    """输出配置"""
    model_config = ConfigDict(extra="forbid")

    csv_path: Path = Field(default=Path("results.csv"))
    json_path: Path = Field(default=Path("results.json"))
    gnuplot: bool = Field(default=False, description="同时输出空白分隔的 gnuplot 数据文件")


class RedisSettings(BaseModel):
    """Redis 配置"""
    model_config = ConfigDict(extra="forbid")

    enabled: bool = Field(default=False)
    host: str = Field(default="localhost")
    port: int = Field(default=6379)
    password: str = Field(default="")
    db: int = Field(default=0)
    ttl_seconds: int = Field(default=7 * 24 * 60 * 60, ge=1)

    @property
    def url(self) -> str:
        """生成 Redis 连接 URL"""
        if self.password:
            return f"redis://:{self.password}@{self.host}:{self.port}/{self.db}"
        return f"redis://{self.host}:{self.port}/{self.db}"


class ServerSettings(BaseModel):
    """HTTP 服务配置"""
    model_config = ConfigDict(extra="forbid")

    host: str = Field(default="0.0.0.0")
    port: int = Field(default=8000, ge=1, le=65535)
    reload: bool = Field(default=False)


class Settings(BaseSettings):
    """应用主配置"""
    app_name: str = Field(default="TransferLab")

    # 嵌套配置
    model: ModelSettings = Field(default_factory=ModelSettings)
    solver: SolverSettings = Field(default_factory=SolverSettings)
    experiment: ExperimentSettings = Field(default_factory=ExperimentSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)
    redis: RedisSettings = Field(default_factory=RedisSettings)
    server: ServerSettings = Field(default_factory=ServerSettings)

    model_config = SettingsConfigDict(
        toml_file="config.toml",
        env_prefix="TRANSFERLAB_",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="forbid",
    )

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        """自定义配置源，添加 TOML 文件支持"""
        return (
            init_settings,
            TomlConfigSettingsSource(settings_cls),
            env_settings,
            file_secret_settings,
        )


def load_settings(config_path: Path) -> Settings:
    """从指定的 TOML 文件加载配置

    该文件取代默认的 config.toml 作为 TOML 配置源，优先级高于环境变量；
    点分键（model.a = 1）与 [model] 表两种写法等价。

    Raises:
        ConfigurationError: 文件不存在或不是合法 TOML
        pydantic.ValidationError: 字段校验失败
    """
    path = Path(config_path)
    if not path.is_file():
        raise ConfigurationError(f"配置文件不存在: {path}")
    try:
        with path.open("rb") as handle:
            tomllib.load(handle)
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"配置文件解析失败: {e}") from e

    # 用指定文件替换默认的 config.toml，避免工作目录中的文件混入
    class FileSettings(Settings):
        model_config = SettingsConfigDict(toml_file=path)

    return FileSettings()


# 全局配置实例
settings = Settings()
