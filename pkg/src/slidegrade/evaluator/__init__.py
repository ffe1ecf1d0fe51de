from .evaluate import (
    EvaluationResult,
    Evaluator,
    ItemResult,
    ProviderMeta,
    account_cost,
    evaluate,
)
from .prompt import BLOCK_TITLES, PromptBundle, build_prompt
from .providers import (
    HttpChatProvider,
    MockProvider,
    Provider,
    ProviderConfig,
    ProviderReply,
    ScriptedProvider,
    make_provider,
)
from .schema import validate_response

__all__ = [
    "EvaluationResult",
    "Evaluator",
    "ItemResult",
    "ProviderMeta",
    "account_cost",
    "evaluate",
    "BLOCK_TITLES",
    "PromptBundle",
    "build_prompt",
    "HttpChatProvider",
    "MockProvider",
    "Provider",
    "ProviderConfig",
    "ProviderReply",
    "ScriptedProvider",
    "make_provider",
    "validate_response",
]
