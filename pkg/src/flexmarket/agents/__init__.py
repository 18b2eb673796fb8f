from .tank import CoverageReport, TankLoad, random_feasible_modulation, verify_scenario_coverage
from .forecast import ForecastParameters, PriceForecast, ThresholdTrack, exponential_mean, forecast
from .retailer import RetailerPortfolio, RetailerPosition, optimize_retailer
from .producer import (
    GenerationUnit,
    ProducerPortfolio,
    ProducerPosition,
    optimize_producer,
    producer_energy_offers,
    producer_reserve_bids,
)

__all__ = [
    "CoverageReport",
    "TankLoad",
    "random_feasible_modulation",
    "verify_scenario_coverage",
    "ForecastParameters",
    "PriceForecast",
    "ThresholdTrack",
    "exponential_mean",
    "forecast",
    "RetailerPortfolio",
    "RetailerPosition",
    "optimize_retailer",
    "GenerationUnit",
    "ProducerPortfolio",
    "ProducerPosition",
    "optimize_producer",
    "producer_energy_offers",
    "producer_reserve_bids",
]
