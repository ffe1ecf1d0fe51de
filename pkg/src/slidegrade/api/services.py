"""Service graph shared by the API app and the CLI."""

from __future__ import annotations

from dataclasses import dataclass

from ..config import AppConfig
from ..evaluator.evaluate import Evaluator
from ..evaluator.providers import Provider, ProviderConfig, make_provider
from ..pipeline.service import Pipeline
from ..store.base import Storage
from .ratelimit import RateLimiter


@dataclass
class Services:
    config: AppConfig
    storage: Storage
    provider: Provider
    evaluator: Evaluator
    pipeline: Pipeline
    limiter: RateLimiter

    def close(self) -> None:
        self.pipeline.stop()
        self.storage.close()


def create_services(
    config: AppConfig | None = None,
    provider: Provider | None = None,
    storage: Storage | None = None,
) -> Services:
    config = config or AppConfig()
    storage = storage or Storage.open(config.data_dir, config)
    provider = provider or make_provider(config)
    evaluator = Evaluator(
        provider, ProviderConfig.from_app_config(config), concurrency=config.provider_concurrency
    )
    pipeline = Pipeline(storage, evaluator, config)
    return Services(
        config=config,
        storage=storage,
        provider=provider,
        evaluator=evaluator,
        pipeline=pipeline,
        limiter=RateLimiter(),
    )
