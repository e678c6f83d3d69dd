from .batchnorm import BatchNormParams, batchnorm_backward, batchnorm_forward
from .head import clamp, head_backward, head_forward
from .lstm import (
    LstmDirectionParams,
    bilstm_backward,
    bilstm_forward,
    direction_backward,
    direction_forward,
    init_direction,
    lstm_cell_backward,
    lstm_cell_forward,
    sigmoid,
)
from .model import (
    BUFFER_NAMES,
    PARAM_NAMES,
    ModelSpec,
    init_params,
    model_backward,
    model_forward,
)
