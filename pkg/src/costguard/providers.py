"""Provider billing clients: one working implementation, real-cloud stubs.

The service consumes billing data through this interface so that real
provider exports can slot in later. Today the simulated client (synthetic
generator or feed files) is the only working source; the GCP/AWS/Azure
clients document the seam and refuse politely.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterator, Protocol

from .feed import FeedConfig, ParsedLine, generate_feed, read_feed
from .model import BillingRecord


class ProviderClient(Protocol):
    """A source of billing records for one provider."""

    def fetch_billing_records(self) -> Iterator[ParsedLine]:
        ...


class SimulatedProviderClient:
    """Deterministic synthetic feed, or a feed file when one is given."""

    def __init__(self, feed_config: FeedConfig | None = None, feed_file: Path | None = None) -> None:
        if (feed_config is None) == (feed_file is None):
            raise ValueError("provide exactly one of feed_config or feed_file")
        self._config = feed_config
        self._file = feed_file

    def fetch_billing_records(self) -> Iterator[ParsedLine]:
        if self._config is not None:
            record: BillingRecord
            for record in generate_feed(self._config):
                yield record
        else:
            assert self._file is not None
            yield from read_feed(self._file)


class _UnimplementedProviderClient:
    provider_name = "unknown"

    def fetch_billing_records(self) -> Iterator[ParsedLine]:
        raise NotImplementedError(
            f"{self.provider_name} billing export integration is not implemented; "
            "use the simulated provider or a feed file"
        )


class GcpProviderClient(_UnimplementedProviderClient):
    provider_name = "gcp"


class AwsProviderClient(_UnimplementedProviderClient):
    provider_name = "aws"


class AzureProviderClient(_UnimplementedProviderClient):
    provider_name = "azure"
