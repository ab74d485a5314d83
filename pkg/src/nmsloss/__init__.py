"""Differentiable NMS loss with a synthetic crowded-scene workbench.

Core pieces: box geometry with analytic IoU gradients, greedy NMS, the
pull/push NMS loss with forward and backward passes, a seeded scene
generator, a toy gradient-descent trainer, and the MR-FPPI pedestrian
evaluation protocol.
"""

from .assignment import AssignConfig, assign_gt
from .evaluation import (EvalConfig, EvalReport, match_detections, match_scene,
                         mr_fppi, nms_event_counts, reasonable_filter)
from .geometry import BBox, InvalidBoxError, IoUGrad, iou, iou_grad, iou_many
from .gradcheck import FDConfig, GradReport, check_grads, fd_gradient
from .loss import (Detection, LossConfig, NmsLossResult, PullEvent, PushEvent,
                   SceneValidationError, nms_loss_forward_backward, pull_loss,
                   push_loss)
from .nms import NmsInput, NmsInputError, nms_greedy
from .scenegen import (GtBox, Scene, SceneGenError, SceneSpec, generate_scene,
                       mean_neighbor_iou, scene_from_dict, scene_from_json,
                       scene_to_dict, scene_to_json)
from .trainer import (TrainConfig, TrainState, TrainingError, history_rows,
                      train_scene)

__all__ = [
    "AssignConfig", "assign_gt",
    "BBox", "InvalidBoxError", "IoUGrad", "iou", "iou_grad", "iou_many",
    "NmsInput", "NmsInputError", "nms_greedy",
    "Detection", "LossConfig", "NmsLossResult", "PullEvent", "PushEvent",
    "SceneValidationError", "nms_loss_forward_backward", "pull_loss", "push_loss",
    "GtBox", "Scene", "SceneGenError", "SceneSpec", "generate_scene",
    "mean_neighbor_iou", "scene_from_dict", "scene_from_json",
    "scene_to_dict", "scene_to_json",
    "TrainConfig", "TrainState", "TrainingError", "history_rows", "train_scene",
    "EvalConfig", "EvalReport", "match_detections", "match_scene", "mr_fppi",
    "nms_event_counts", "reasonable_filter",
    "FDConfig", "GradReport", "check_grads", "fd_gradient",
]

__version__ = "0.1.0"
