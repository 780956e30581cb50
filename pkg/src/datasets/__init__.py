# Dataset ingestion, construction and splits
from .containers import ImageTensor, LabeledDataset
from .file_formats import load_images, load_labeled, read_tensor, select_classes, write_tensor
from .generators import downsample, gen_gaussian_noise, gen_uniform_noise, random_crop
from .splits import class_split, holdout_split

__all__ = [
    'ImageTensor', 'LabeledDataset',
    'load_images', 'load_labeled', 'read_tensor', 'select_classes', 'write_tensor',
    'downsample', 'gen_gaussian_noise', 'gen_uniform_noise', 'random_crop',
    'class_split', 'holdout_split',
]
