from .amp_data import AmpDataset, generate_amp_dataset
from .selection import draw_selection, probability_selection, selection_probability
from .pipeline import (
    CurriculumTracker, PipelineConfig, TerrainConfig, Trainer, evaluate_success,
    load_bundle, train_stage1, train_stage2,
)
