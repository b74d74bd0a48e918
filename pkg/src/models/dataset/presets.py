from dataclasses import dataclass

from conf.conf_types import DatasetPreset

__all__ = ["CorpusPreset", "PRESETS"]


@dataclass(frozen=True)
class CorpusPreset:
    feature_columns: tuple[str, ...]
    separator: str = ","
    decimal: str = "."
    missing_values: tuple[float, ...] = ()


PRESETS: dict[DatasetPreset, CorpusPreset] = {
    # daily Google stock prices
    DatasetPreset.STOCK: CorpusPreset(feature_columns=("Open", "High", "Low", "Close", "Adj Close", "Volume")),
    # UCI appliances energy prediction, 10 minute resolution
    DatasetPreset.ENERGY: CorpusPreset(
        feature_columns=(
            "Appliances", "lights",
            "T1", "RH_1", "T2", "RH_2", "T3", "RH_3", "T4", "RH_4", "T5", "RH_5",
            "T6", "RH_6", "T7", "RH_7", "T8", "RH_8", "T9", "RH_9",
            "T_out", "Press_mm_hg", "RH_out", "Windspeed", "Visibility", "Tdewpoint",
            "rv1", "rv2",
        ),
    ),
    # UCI air quality, hourly; -200 marks a missing reading
    DatasetPreset.AIR: CorpusPreset(
        feature_columns=(
            "CO(GT)", "PT08.S1(CO)", "NMHC(GT)", "C6H6(GT)", "PT08.S2(NMHC)", "NOx(GT)",
            "PT08.S3(NOx)", "NO2(GT)", "PT08.S4(NO2)", "PT08.S5(O3)", "T", "RH", "AH",
        ),
        separator=";",
        decimal=",",
        missing_values=(-200.0,),
    ),
}
