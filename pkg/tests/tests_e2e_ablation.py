import logging

import bittensor as bt

from dualgraph.data.case_store import split_cases
from dualgraph.synth import BeamSpec, CampaignSpec, generate_case, sample_offset_pairs
from dualgraph.trainer import TrainConfig
from dualgraph.trainer.ablation import ablate, ablation_rows
from dualgraph.utils.tables import ablation_table

logger = logging.getLogger(__name__)

CASES = 24
EPOCHS = 60


def main(num_seeds: int, batch_size: int):
    bt.logging.set_debug()
    spec = BeamSpec()
    campaign = CampaignSpec(count=CASES, seed=0)
    pairs = sample_offset_pairs(campaign)
    cases = [generate_case(spec, pair, frames=campaign.frames) for pair in pairs]
    split = split_cases(len(cases), seed=0)

    def pick(indices):
        return [cases[i] for i in indices]

    config = TrainConfig(epochs=EPOCHS, batch_size=batch_size, hidden=32, mlp_hidden=32)
    summary = ablate(
        pick(split.train),
        pick(split.val),
        pick(split.test),
        config,
        seeds=range(num_seeds),
    )
    logger.info("\n" + ablation_table(summary))
    logger.info(f"rows: {ablation_rows(summary)}")

    # the element branch should beat nodal reconstruction on element fields
    assert summary.stress_reduction_pct > 0.0
    assert summary.peeq_reduction_pct > 0.0


def test_e2e_ablation(num_seeds, batch_size):
    main(num_seeds, batch_size)
