#pragma once

#include "arq/core/config_io.hpp"
#include "arq/core/error.hpp"
#include "arq/core/random.hpp"
#include "arq/core/serialization.hpp"
#include "arq/core/types.hpp"
#include "arq/data/batch.hpp"
#include "arq/data/dataset_ops.hpp"
#include "arq/env/grid_pick.hpp"
#include "arq/env/random_mdp.hpp"
#include "arq/model/autodiff.hpp"
#include "arq/model/checkpoint.hpp"
#include "arq/model/grad_check.hpp"
#include "arq/model/loss.hpp"
#include "arq/model/params.hpp"
#include "arq/model/seq_q_model.hpp"
#include "arq/tabular/behavior.hpp"
#include "arq/tabular/conservative.hpp"
#include "arq/tabular/mdp.hpp"
#include "arq/tabular/qtable.hpp"
#include "arq/tabular/value_iteration.hpp"
#include "arq/tabular/verification.hpp"
#include "arq/train/ablation.hpp"
#include "arq/train/bc.hpp"
#include "arq/train/evaluate.hpp"
#include "arq/train/metrics_io.hpp"
#include "arq/train/trainer.hpp"
#include "arq/cli/commands.hpp"
#include "arq/cli/run_config.hpp"
