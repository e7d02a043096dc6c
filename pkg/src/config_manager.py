"""
配置管理器
负责重构/验证/基准参数的持久化存储
"""
import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

logger = logging.getLogger(__name__)


class ConfigManager:
    def __init__(self, app_name: str = "Reflectionless", config_dir: Optional[Union[str, Path]] = None):
        self.app_name = app_name
        self.config_dir = Path(config_dir) if config_dir is not None else self._get_config_dir()
        self.config_file = self.config_dir / "config.json"

        # 默认配置
        self.default_config = {
            "gap_rel_tolerance": 1e-8,
            "grid": {"min": -10.0, "max": 10.0, "step": 0.01},
            "naive_step": 1e-4,
            "verify": {
                "domain_factor": 30.0,  # 以 1/κ_1 为单位
                "step_factor": 1e-3,
                "energy_tolerance": 1e-4,
                "reflection_tolerance": 1e-3,
                "reflection_k_factors": [0.5, 1.0, 2.0],
            },
            "bench": {"points": 1000, "span": 2.0},
            "workers": 1,
        }

        self.config = self.load_config()

    def _get_config_dir(self) -> Path:
        """获取配置目录路径"""
        if os.name == 'nt':  # Windows
            return Path(os.environ.get('APPDATA', '')) / self.app_name
        return Path.home() / f'.{self.app_name.lower()}'

    def load_config(self) -> Dict[str, Any]:
        """加载配置，缺失的键用默认值补齐"""
        config = copy.deepcopy(self.default_config)
        if not self.config_file.exists():
            return config
        try:
            with open(self.config_file, 'r', encoding='utf-8') as f:
                stored = json.load(f)
            if not isinstance(stored, dict):
                raise ValueError("配置文件顶层应为对象")
        except (OSError, ValueError) as e:
            logger.warning(f"加载配置失败，使用默认配置: {e}")
            return config

        # 合并默认配置，嵌套段按键合并
        for key, value in stored.items():
            if isinstance(config.get(key), dict) and isinstance(value, dict):
                config[key].update(value)
            else:
                config[key] = value
        return config

    def save_config(self) -> bool:
        """保存配置"""
        try:
            self.config_dir.mkdir(parents=True, exist_ok=True)
            with open(self.config_file, 'w', encoding='utf-8') as f:
                json.dump(self.config, f, indent=2, ensure_ascii=False)
            return True
        except OSError as e:
            logger.warning(f"保存配置失败: {e}")
            return False

    def get(self, key: str, default: Any = None) -> Any:
        """获取配置值"""
        return self.config.get(key, default)

    def set(self, key: str, value: Any) -> bool:
        """设置配置值"""
        self.config[key] = value
        return self.save_config()

    def update(self, updates: Dict[str, Any]) -> bool:
        """批量更新配置"""
        self.config.update(updates)
        return self.save_config()

    def reset_config(self) -> bool:
        """重置配置为默认值"""
        self.config = copy.deepcopy(self.default_config)
        return self.save_config()

    def get_config_info(self) -> Dict[str, Any]:
        """获取配置信息"""
        return {
            "config_dir": str(self.config_dir),
            "config_file": str(self.config_file),
            "config_exists": self.config_file.exists(),
            "total_settings": len(self.config),
        }


# 配置项访问的便捷方法
class AppSettings:
    def __init__(self, config_manager: ConfigManager):
        self.config = config_manager

    def _section(self, name: str) -> Dict[str, Any]:
        return dict(self.config.get(name, {}) or {})

    def _set_in_section(self, name: str, key: str, value: Any):
        section = self._section(name)
        section[key] = value
        self.config.set(name, section)

    @property
    def gap_rel_tolerance(self) -> float:
        return float(self.config.get("gap_rel_tolerance", 1e-8))

    @gap_rel_tolerance.setter
    def gap_rel_tolerance(self, value: float):
        if 0 < value <= 1e-2:
            self.config.set("gap_rel_tolerance", float(value))
        else:
            raise ValueError("最小间隔相对阈值必须在 (0, 1e-2] 之间")

    @property
    def default_grid(self) -> Dict[str, float]:
        grid = self._section("grid")
        return {
            "min": float(grid.get("min", -10.0)),
            "max": float(grid.get("max", 10.0)),
            "step": float(grid.get("step", 0.01)),
        }

    @default_grid.setter
    def default_grid(self, value: Dict[str, float]):
        lo, hi, step = float(value["min"]), float(value["max"]), float(value["step"])
        if not (lo < hi and step > 0):
            raise ValueError("网格要求 min < max 且 step > 0")
        self.config.set("grid", {"min": lo, "max": hi, "step": step})

    @property
    def naive_step(self) -> float:
        return float(self.config.get("naive_step", 1e-4))

    @naive_step.setter
    def naive_step(self, value: float):
        if 1e-5 <= value <= 1e-2:
            self.config.set("naive_step", float(value))
        else:
            raise ValueError("差分步长必须在 1e-5 到 1e-2 之间")

    @property
    def verify_domain_factor(self) -> float:
        return float(self._section("verify").get("domain_factor", 30.0))

    @verify_domain_factor.setter
    def verify_domain_factor(self, value: float):
        if value > 0:
            self._set_in_section("verify", "domain_factor", float(value))
        else:
            raise ValueError("验证区间半宽必须为正")

    @property
    def verify_step_factor(self) -> float:
        return float(self._section("verify").get("step_factor", 1e-3))

    @verify_step_factor.setter
    def verify_step_factor(self, value: float):
        if 0 < value <= 0.1:
            self._set_in_section("verify", "step_factor", float(value))
        else:
            raise ValueError("验证网格步长必须在 (0, 0.1] 之间")

    @property
    def energy_tolerance(self) -> float:
        return float(self._section("verify").get("energy_tolerance", 1e-4))

    @energy_tolerance.setter
    def energy_tolerance(self, value: float):
        if value > 0:
            self._set_in_section("verify", "energy_tolerance", float(value))
        else:
            raise ValueError("能量容差必须为正")

    @property
    def reflection_tolerance(self) -> float:
        return float(self._section("verify").get("reflection_tolerance", 1e-3))

    @reflection_tolerance.setter
    def reflection_tolerance(self, value: float):
        if value > 0:
            self._set_in_section("verify", "reflection_tolerance", float(value))
        else:
            raise ValueError("反射容差必须为正")

    @property
    def reflection_k_factors(self) -> List[float]:
        return [float(k) for k in self._section("verify").get("reflection_k_factors", [0.5, 1.0, 2.0])]

    @reflection_k_factors.setter
    def reflection_k_factors(self, value: List[float]):
        factors = [float(k) for k in value]
        if factors and all(k > 0 for k in factors):
            self._set_in_section("verify", "reflection_k_factors", factors)
        else:
            raise ValueError("反射采样波数必须为非空的正数列表")

    @property
    def bench_points(self) -> int:
        return int(self._section("bench").get("points", 1000))

    @bench_points.setter
    def bench_points(self, value: int):
        if 1 <= value <= 1_000_000:
            self._set_in_section("bench", "points", int(value))
        else:
            raise ValueError("基准点数必须在 1-1000000 之间")

    @property
    def bench_span(self) -> float:
        return float(self._section("bench").get("span", 2.0))

    @bench_span.setter
    def bench_span(self, value: float):
        if value > 0:
            self._set_in_section("bench", "span", float(value))
        else:
            raise ValueError("基准网格半宽必须为正")

    @property
    def workers(self) -> int:
        return int(self.config.get("workers", 1))

    @workers.setter
    def workers(self, value: int):
        if 1 <= value <= 64:
            self.config.set("workers", int(value))
        else:
            raise ValueError("线程数必须在 1-64 之间")


# 测试代码
if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        config_manager = ConfigManager(config_dir=tmp)
        settings = AppSettings(config_manager)

        print("配置信息:")
        for key, value in config_manager.get_config_info().items():
            print(f"  {key}: {value}")

        settings.workers = 4
        settings.default_grid = {"min": -5, "max": 5, "step": 0.01}
        print(f"  线程数: {settings.workers}")
        print(f"  默认网格: {settings.default_grid}")
