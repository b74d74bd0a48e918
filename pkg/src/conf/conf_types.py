from enum import StrEnum


class Backbone(StrEnum):
    TRANSFORMER = "transformer"
    GRU = "gru"


class ScheduleKind(StrEnum):
    COSINE = "cosine"


class SigmaPolicy(StrEnum):
    BETA = "beta"
    BETA_TILDE = "beta_tilde"


class DatasetKind(StrEnum):
    SINE = "sine"
    CSV = "csv"


class DatasetPreset(StrEnum):
    STOCK = "stock"
    ENERGY = "energy"
    AIR = "air"


class ProjectionMethod(StrEnum):
    PCA = "pca"
    TSNE = "tsne"


class ProjectionLabel(StrEnum):
    REAL = "real"
    SYNTHETIC = "synthetic"


class MetricName(StrEnum):
    LDS = "lds"
    LPS = "lps"
    LPS_BASELINE = "lps_baseline"
    PLUS_FIVE_STEPS = "plus_5_steps"
    JSD = "jsd"
    ALPHA_PRECISION = "alpha_precision"
    BETA_RECALL = "beta_recall"
    COVERAGE = "coverage"
