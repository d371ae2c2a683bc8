use std::collections::HashMap;

use rand::Rng;
use smallvec::SmallVec;

use super::config::{OpponentSelection, PlannerConfig};
use crate::behavior_space::{Hypothesis, HypotheticalPolicy};
use crate::error::DomainError;
use crate::AgentId;

pub type NodeId = usize;

/// Other-agent actions of one joint action, compared bit-for-bit.
pub(crate) type JointKey = SmallVec<[u64; 8]>;

pub(crate) fn joint_key(actions: &[f64]) -> JointKey {
    // Normalise -0.0 so it shares a child with 0.0.
    actions.iter().map(|&a| (a + 0.0).to_bits()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedAction {
    pub action: f64,
    pub visits: u64,
    /// Mean ego return after this action was taken.
    pub q: f64,
}

/// Statistics of one other agent under one hypothesis at one
/// (history node, ego action) pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OtherStats {
    visits: u64,
    draws: u64,
    actions: Vec<ExpandedAction>,
}

impl OtherStats {
    /// `N_j(⟨h⟩, θ)`.
    pub fn visits(&self) -> u64 {
        self.visits
    }

    /// Widening draws so far; duplicates of an expanded action count as a
    /// draw but not as a new action.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn actions(&self) -> &[ExpandedAction] {
        &self.actions
    }

    fn record(&mut self, index: usize, ret: f64) {
        self.visits += 1;
        let a = &mut self.actions[index];
        a.visits += 1;
        a.q += (ret - a.q) / a.visits as f64;
    }
}

/// Result of one other-agent selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtherChoice {
    pub index: usize,
    pub action: f64,
    pub widened: bool,
}

/// Picks an action for one other agent under its sampled hypothesis.
///
/// Widens while the number of draws is below `ceil(k0 · N^α0)` (at least
/// one), otherwise returns the expanded action with the lowest mean ego
/// return (worst case) or a uniformly random expanded action. Ties go to the
/// earliest expanded action.
pub fn select_other_action<S, P, R>(
    stats: &mut OtherStats,
    hypothesis: &Hypothesis<P>,
    history: &S,
    agent: AgentId,
    cfg: &PlannerConfig,
    selection: OpponentSelection,
    rng: &mut R,
) -> Result<OtherChoice, DomainError>
where
    S: ?Sized,
    P: HypotheticalPolicy<S>,
    R: Rng + ?Sized,
{
    if stats.actions.is_empty() || (stats.draws as usize) < cfg.widening_bound(stats.visits) {
        let action = hypothesis.sample_action(history, agent, rng)?;
        stats.draws += 1;
        let index = match stats.actions.iter().position(|e| e.action == action) {
            Some(i) => i,
            None => {
                stats.actions.push(ExpandedAction {
                    action,
                    visits: 0,
                    q: 0.0,
                });
                stats.actions.len() - 1
            }
        };
        return Ok(OtherChoice {
            index,
            action,
            widened: true,
        });
    }
    let index = match selection {
        OpponentSelection::WorstCase => {
            let mut best = 0;
            for (i, e) in stats.actions.iter().enumerate().skip(1) {
                if e.q < stats.actions[best].q {
                    best = i;
                }
            }
            best
        }
        OpponentSelection::Random => rng.random_range(0..stats.actions.len()),
    };
    Ok(OtherChoice {
        index,
        action: stats.actions[index].action,
        widened: false,
    })
}

#[derive(Debug, Clone, Default)]
pub struct EgoEdge {
    visits: u64,
    q: f64,
    /// `others[j]` holds (hypothesis index, stats) pairs for agent `j`.
    others: Vec<Vec<(usize, OtherStats)>>,
    children: HashMap<JointKey, NodeId>,
}

impl EgoEdge {
    fn new(num_agents: usize) -> Self {
        Self {
            others: vec![Vec::new(); num_agents],
            ..Self::default()
        }
    }

    pub fn visits(&self) -> u64 {
        self.visits
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn other_stats(&self, agent: AgentId, hypothesis: usize) -> Option<&OtherStats> {
        self.others
            .get(agent.0)?
            .iter()
            .find(|(h, _)| *h == hypothesis)
            .map(|(_, s)| s)
    }

    /// Every (hypothesis, stats) pair recorded for `agent`.
    pub fn agent_stats(&self, agent: AgentId) -> &[(usize, OtherStats)] {
        self.others.get(agent.0).map_or(&[], Vec::as_slice)
    }

    pub fn other_stats_mut(&mut self, agent: AgentId, hypothesis: usize) -> &mut OtherStats {
        let list = &mut self.others[agent.0];
        let pos = match list.iter().position(|(h, _)| *h == hypothesis) {
            Some(p) => p,
            None => {
                list.push((hypothesis, OtherStats::default()));
                list.len() - 1
            }
        };
        &mut list[pos].1
    }

    pub fn children(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.children.values().copied()
    }
}

#[derive(Debug, Clone)]
pub struct SearchNode {
    visits: u64,
    edges: Vec<EgoEdge>,
}

impl SearchNode {
    pub fn new(num_ego_actions: usize, num_agents: usize) -> Self {
        Self {
            visits: 0,
            edges: (0..num_ego_actions).map(|_| EgoEdge::new(num_agents)).collect(),
        }
    }

    pub fn visits(&self) -> u64 {
        self.visits
    }

    pub fn edges(&self) -> &[EgoEdge] {
        &self.edges
    }

    pub fn edge_mut(&mut self, ego_action: usize) -> &mut EgoEdge {
        &mut self.edges[ego_action]
    }

    /// Test hook: overwrite the statistics of one ego action.
    pub fn set_ego_stats(&mut self, ego_action: usize, visits: u64, q: f64) {
        let e = &mut self.edges[ego_action];
        e.visits = visits;
        e.q = q;
        self.visits = self.edges.iter().map(|e| e.visits).sum();
    }
}

/// UCB selection over the ego's actions.
///
/// Unvisited actions come first in index order. Otherwise mean returns are
/// min-max normalised to [0, 1] across the node's actions and the action
/// maximising `q̂ + c·sqrt(ln N / n)` wins, lowest index on ties.
pub fn select_ego_action(node: &SearchNode, cfg: &PlannerConfig) -> usize {
    if let Some(i) = node.edges.iter().position(|e| e.visits == 0) {
        return i;
    }
    let (lo, hi) = node
        .edges
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
            (lo.min(e.q), hi.max(e.q))
        });
    let range = hi - lo;
    let total: u64 = node.edges.iter().map(|e| e.visits).sum();
    let ln_total = (total as f64).ln();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, e) in node.edges.iter().enumerate() {
        let q_hat = if range > 0.0 { (e.q - lo) / range } else { 0.0 };
        let score = q_hat + cfg.ucb_c * (ln_total / e.visits as f64).sqrt();
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    best
}

/// One transition of a simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathStep {
    pub node: NodeId,
    pub ego_action: usize,
    /// Per other agent: (sampled hypothesis, expanded-action index).
    pub others: SmallVec<[(usize, usize); 8]>,
    pub reward: f64,
}

#[derive(Debug, Clone)]
pub struct SearchTree {
    nodes: Vec<SearchNode>,
    num_ego_actions: usize,
    num_agents: usize,
    /// `type_updates[j][k]`: number of Q_j updates made under hypothesis k.
    type_updates: Vec<Vec<u64>>,
}

impl SearchTree {
    pub fn new(num_ego_actions: usize, num_agents: usize, k_per_agent: &[usize]) -> Self {
        Self {
            nodes: vec![SearchNode::new(num_ego_actions, num_agents)],
            num_ego_actions,
            num_agents,
            type_updates: k_per_agent.iter().map(|&k| vec![0; k]).collect(),
        }
    }

    pub const ROOT: NodeId = 0;

    pub fn root(&self) -> &SearchNode {
        &self.nodes[Self::ROOT]
    }

    pub fn node(&self, id: NodeId) -> &SearchNode {
        &self.nodes[id]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut SearchNode {
        &mut self.nodes[id]
    }

    pub fn nodes(&self) -> &[SearchNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn type_updates(&self) -> &[Vec<u64>] {
        &self.type_updates
    }

    /// Child reached by `others` after `ego_action`, created on demand.
    /// Returns the child and whether it was newly created.
    pub(crate) fn child(&mut self, node: NodeId, ego_action: usize, others: &[f64]) -> (NodeId, bool) {
        let key = joint_key(others);
        if let Some(&c) = self.nodes[node].edges[ego_action].children.get(&key) {
            return (c, false);
        }
        let id = self.nodes.len();
        self.nodes
            .push(SearchNode::new(self.num_ego_actions, self.num_agents));
        self.nodes[node].edges[ego_action].children.insert(key, id);
        (id, true)
    }

    /// Discounted backup from the leaf to the root: `G_d = r_d + γ·G_{d+1}`.
    /// Updates the ego mean of every visited edge and, for each other agent,
    /// only the statistics of the hypothesis sampled in this iteration.
    pub fn backpropagate(&mut self, path: &[PathStep], leaf_value: f64, gamma: f64) {
        let mut ret = leaf_value;
        for step in path.iter().rev() {
            ret = step.reward + gamma * ret;
            let node = &mut self.nodes[step.node];
            node.visits += 1;
            let edge = &mut node.edges[step.ego_action];
            edge.visits += 1;
            edge.q += (ret - edge.q) / edge.visits as f64;
            for (j, &(hyp, idx)) in step.others.iter().enumerate() {
                edge.other_stats_mut(AgentId(j), hyp).record(idx, ret);
                self.type_updates[j][hyp] += 1;
            }
        }
    }
}
