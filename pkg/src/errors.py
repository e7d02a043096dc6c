"""
错误类型
所有重构/验证错误都带有机器可读的错误码，CLI 以 JSON 形式输出
"""
from typing import Any, Dict


class ReconstructionError(ValueError):
    """重构流程中的可预期错误（输入、数值范围、验证失败）"""

    def __init__(self, message: str, **detail: Any):
        super().__init__(message)
        self.message = message
        self.detail = detail

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_dict(self) -> Dict[str, Any]:
        """转换为 {"error": code, "detail": ...} 结构"""
        detail: Dict[str, Any] = {"message": self.message}
        detail.update(self.detail)
        return {"error": self.code, "detail": detail}


# 谱输入
class EmptySpectrum(ReconstructionError):
    pass


class NonPositiveKappa(ReconstructionError):
    pass


class NonAscendingSpectrum(ReconstructionError):
    pass


class DegenerateGap(ReconstructionError):
    pass


class LengthMismatch(ReconstructionError):
    pass


class NonPositiveNorming(ReconstructionError):
    pass


class NonPositiveConstant(ReconstructionError):
    pass


class OverflowShift(ReconstructionError):
    pass


# 行列式 / 展开
class SizeLimit(ReconstructionError):
    pass


class NotSquare(ReconstructionError):
    pass


class EmptyGrid(ReconstructionError):
    pass


class OverflowRange(ReconstructionError):
    pass


class IndexOutOfRange(ReconstructionError):
    pass


# 示例谱
class NonPositiveN(ReconstructionError):
    pass


class NoBoundStates(ReconstructionError):
    pass


class RootBracketFailure(ReconstructionError):
    pass


class InvalidPreset(ReconstructionError):
    pass


# 正向验证
class NonUniformGrid(ReconstructionError):
    pass


class StateCountMismatch(ReconstructionError):
    pass


class InsufficientDecay(ReconstructionError):
    pass


class InvalidGrid(ReconstructionError):
    pass


class VerificationFailed(ReconstructionError):
    """验证阈值未通过（CLI 退出码 3）"""
    pass
