"""Short DDPG training run followed by a deterministic rollout.

Run: python3 demos/04_ddpg_training.py   (a few minutes; the full default is 400 episodes)
"""

import dataclasses

from macnoma.channel import SystemConfig, sample_scenario
from macnoma.ddpg import AgentConfig, rollout, train
from macnoma.rl_env import MaCnomaEnv
from macnoma.seeding import stream

env = MaCnomaEnv(SystemConfig())
cfg = dataclasses.replace(AgentConfig(), episodes=40)
result = train(env, cfg, seed=0, progress=lambda k, r: print(f"episode {k:3d} mean reward {r:8.3f}")
               if k % 10 == 0 else None)

scenario = sample_scenario(env.config, stream(0, "heldout", 0))
best, rewards = rollout(result.agent.actor, env, scenario, cfg.steps)
print(f"held-out rollout: best feasible sum rate {best:.3f}, mean reward {rewards.mean():.3f}")
