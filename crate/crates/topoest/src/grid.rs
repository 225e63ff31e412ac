//! Network data model, per-unit conversion, topology application, and the
//! text formats for grids and switch plans.
//!
//! A grid file is UTF-8 text with bracketed section headers and CSV rows:
//!
//! ```text
//! [meta]
//! base_kv,12.66
//! base_mva,10.0
//! [buses]
//! # id,kind,p_kw,q_kvar
//! 1,substation,0,0
//! 2,load,100,60
//! [lines]
//! # id,from,to,r_ohm,x_ohm,switch
//! 1,1,2,0.0922,0.0470,-
//! [pmus]
//! 2
//! ```
//!
//! Comment lines begin with `#`. Everything is converted to per-unit on
//! `(base_mva, base_kv)` at parse time; the raw ohm/kW figures are retained
//! so that serialization reproduces the input exactly.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

/// Default feeder voltage base in kV when a grid file omits `[meta]`.
pub const DEFAULT_BASE_KV: f64 = 12.66;
/// Default power base in MVA when a grid file omits `[meta]`.
pub const DEFAULT_BASE_MVA: f64 = 10.0;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("validation: {0}")]
    Validation(String),
}

/// Bus kind: exactly one bus per model is the substation slack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    Substation,
    Load,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    /// External 1-based id; internal indices are `id - 1`.
    pub id: usize,
    pub kind: BusKind,
    /// Nominal active demand, kW (as read from the file).
    pub p_kw: f64,
    /// Nominal reactive demand, kvar.
    pub q_kvar: f64,
    /// Nominal active demand in per-unit on the system MVA base.
    pub p_pu: f64,
    pub q_pu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: usize,
    /// Internal (0-based) endpoint indices.
    pub from: usize,
    pub to: usize,
    pub r_ohm: f64,
    pub x_ohm: f64,
    pub r_pu: f64,
    pub x_pu: f64,
    /// Switch id carried by this line, if any. At most one per line.
    pub switch: Option<usize>,
}

impl Line {
    /// Series admittance `(g, b)` of the branch: `g = r/(r^2+x^2)`,
    /// `b = -x/(r^2+x^2)`.
    pub fn admittance(&self) -> (f64, f64) {
        line_admittance(self.r_pu, self.x_pu)
    }
}

/// Series-branch conversion from impedance to admittance, per-unit.
/// Requires `(r, x) != (0, 0)`; zero-impedance lines are rejected at parse
/// time.
pub fn line_admittance(r: f64, x: f64) -> (f64, f64) {
    let d = r * r + x * x;
    (r / d, -x / d)
}

/// A switch indexed into the topology vector; `line` is the internal index
/// of the line it sits on.
#[derive(Debug, Clone, PartialEq)]
pub struct Switch {
    pub id: usize,
    pub line: usize,
}

/// Ordered open/closed statuses of all switches. `false` means the switch is
/// open and its line disconnected.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TopologyVector(pub Vec<bool>);

impl TopologyVector {
    pub fn all_open(n: usize) -> Self {
        TopologyVector(vec![false; n])
    }

    pub fn all_closed(n: usize) -> Self {
        TopologyVector(vec![true; n])
    }

    /// Builds a vector from the low `n` bits of `bits`; bit `i` is switch `i`.
    pub fn from_bits(bits: u32, n: usize) -> Self {
        TopologyVector((0..n).map(|i| bits >> i & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Renders as `{0,1,...}` in switch order.
    pub fn display(&self) -> String {
        let inner: Vec<&str> = self.0.iter().map(|&s| if s { "1" } else { "0" }).collect();
        format!("{{{}}}", inner.join(","))
    }
}

/// Immutable network model in per-unit. Construct through [`parse_grid`];
/// all invariants hold afterwards and the model is safe to share across
/// threads.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub switches: Vec<Switch>,
    /// Internal indices of buses carrying a micro-PMU, sorted.
    pub pmu_buses: Vec<usize>,
    pub base_kv: f64,
    pub base_mva: f64,
}

impl NetworkModel {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_switches(&self) -> usize {
        self.switches.len()
    }

    /// Internal index of the substation bus.
    pub fn substation(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Substation)
            .expect("validated model has a substation")
    }

    /// Internal indices of all load buses, in id order.
    pub fn load_buses(&self) -> Vec<usize> {
        self.buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == BusKind::Load)
            .map(|(i, _)| i)
            .collect()
    }

    /// kW to per-unit on this model's MVA base.
    pub fn kw_to_pu(&self, kw: f64) -> f64 {
        kw / (1000.0 * self.base_mva)
    }

    /// Per-unit back to kW.
    pub fn pu_to_kw(&self, pu: f64) -> f64 {
        pu * 1000.0 * self.base_mva
    }

    /// Impedance base in ohms, `kV^2 / MVA`.
    pub fn z_base(&self) -> f64 {
        self.base_kv * self.base_kv / self.base_mva
    }

    /// Nominal per-bus demand snapshot in per-unit.
    pub fn nominal_loads(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.buses.iter().map(|b| b.p_pu).collect(),
            self.buses.iter().map(|b| b.q_pu).collect(),
        )
    }

    /// Applies a topology: keeps every non-switchable line plus switchable
    /// lines whose status is closed, and labels connected components.
    /// Islanded results are legal output; callers decide what to do.
    pub fn apply_topology(&self, topo: &TopologyVector) -> EnergizedGraph {
        assert_eq!(
            topo.len(),
            self.switches.len(),
            "topology length must match switch count"
        );
        let energized: Vec<usize> = self
            .lines
            .iter()
            .enumerate()
            .filter(|(_, l)| match l.switch {
                None => true,
                Some(s) => topo.0[s],
            })
            .map(|(i, _)| i)
            .collect();

        // Union-find over buses.
        let n = self.n_buses();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for &li in &energized {
            let l = &self.lines[li];
            let (a, b) = (find(&mut parent, l.from), find(&mut parent, l.to));
            if a != b {
                parent[a] = b;
            }
        }
        let mut component = vec![usize::MAX; n];
        let mut n_components = 0;
        for i in 0..n {
            let root = find(&mut parent, i);
            if component[root] == usize::MAX {
                component[root] = n_components;
                n_components += 1;
            }
            component[i] = component[root];
        }
        EnergizedGraph {
            n_buses: n,
            lines: energized,
            component,
            n_components,
        }
    }

    /// Serializes back to the grid file format. Raw ohm/kW values are
    /// emitted unchanged, so `parse_grid(serialize(m)) == m`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str("[meta]\n");
        let _ = writeln!(out, "base_kv,{}", self.base_kv);
        let _ = writeln!(out, "base_mva,{}", self.base_mva);
        out.push_str("[buses]\n");
        for b in &self.buses {
            let kind = match b.kind {
                BusKind::Substation => "substation",
                BusKind::Load => "load",
            };
            let _ = writeln!(out, "{},{},{},{}", b.id, kind, b.p_kw, b.q_kvar);
        }
        out.push_str("[lines]\n");
        for l in &self.lines {
            let sw = match l.switch {
                Some(s) => s.to_string(),
                None => "-".to_string(),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                l.id,
                self.buses[l.from].id,
                self.buses[l.to].id,
                l.r_ohm,
                l.x_ohm,
                sw
            );
        }
        out.push_str("[pmus]\n");
        for &p in &self.pmu_buses {
            let _ = writeln!(out, "{}", self.buses[p].id);
        }
        out
    }
}

/// Sub-multigraph produced by [`NetworkModel::apply_topology`].
#[derive(Debug, Clone)]
pub struct EnergizedGraph {
    pub n_buses: usize,
    /// Internal indices of energized lines.
    pub lines: Vec<usize>,
    /// Component label per bus.
    pub component: Vec<usize>,
    pub n_components: usize,
}

impl EnergizedGraph {
    pub fn is_connected(&self) -> bool {
        self.n_components == 1
    }

    /// Number of independent loops among energized lines.
    pub fn loop_count(&self) -> usize {
        self.lines.len() + self.n_components - self.n_buses
    }

    /// Number of unordered bus pairs that are connected to each other.
    pub fn connected_pairs(&self) -> usize {
        let mut sizes = vec![0usize; self.n_components];
        for &c in &self.component {
            sizes[c] += 1;
        }
        sizes.iter().map(|&s| s * (s - 1) / 2).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    None,
    Meta,
    Buses,
    Lines,
    Pmus,
}

/// Parses a grid file into a validated [`NetworkModel`].
pub fn parse_grid(text: &str) -> Result<NetworkModel, GridError> {
    let mut base_kv = DEFAULT_BASE_KV;
    let mut base_mva = DEFAULT_BASE_MVA;
    let mut bus_rows: Vec<(usize, Bus)> = Vec::new();
    let mut line_rows: Vec<(usize, usize, usize, usize, f64, f64, Option<usize>)> = Vec::new();
    let mut pmu_ids: Vec<(usize, usize)> = Vec::new();

    let mut section = Section::None;
    for (ln, raw) in text.lines().enumerate() {
        let lineno = ln + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(header) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = match header {
                "meta" => Section::Meta,
                "buses" => Section::Buses,
                "lines" => Section::Lines,
                "pmus" => Section::Pmus,
                other => {
                    return Err(GridError::Parse {
                        line: lineno,
                        msg: format!("unknown section [{other}]"),
                    })
                }
            };
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let err = |msg: String| GridError::Parse { line: lineno, msg };
        match section {
            Section::None => {
                return Err(err("data row before any section header".into()));
            }
            Section::Meta => {
                if fields.len() != 2 {
                    return Err(err("meta rows are `key,value`".into()));
                }
                let value: f64 = fields[1]
                    .parse()
                    .map_err(|_| err(format!("bad meta value `{}`", fields[1])))?;
                match fields[0] {
                    "base_kv" => base_kv = value,
                    "base_mva" => base_mva = value,
                    other => return Err(err(format!("unknown meta key `{other}`"))),
                }
            }
            Section::Buses => {
                if fields.len() != 4 {
                    return Err(err("bus rows are `id,kind,p_kw,q_kvar`".into()));
                }
                let id: usize = fields[0]
                    .parse()
                    .map_err(|_| err(format!("bad bus id `{}`", fields[0])))?;
                let kind = match fields[1] {
                    "substation" => BusKind::Substation,
                    "load" => BusKind::Load,
                    other => return Err(err(format!("unknown bus kind `{other}`"))),
                };
                let p_kw: f64 = fields[2]
                    .parse()
                    .map_err(|_| err(format!("bad p_kw `{}`", fields[2])))?;
                let q_kvar: f64 = fields[3]
                    .parse()
                    .map_err(|_| err(format!("bad q_kvar `{}`", fields[3])))?;
                if id == 0 {
                    return Err(err("bus ids start at 1".into()));
                }
                if p_kw < 0.0 {
                    return Err(err("active demand must be >= 0".into()));
                }
                bus_rows.push((
                    lineno,
                    Bus {
                        id,
                        kind,
                        p_kw,
                        q_kvar,
                        p_pu: 0.0,
                        q_pu: 0.0,
                    },
                ));
            }
            Section::Lines => {
                if fields.len() != 6 {
                    return Err(err("line rows are `id,from,to,r_ohm,x_ohm,switch`".into()));
                }
                let id: usize = fields[0]
                    .parse()
                    .map_err(|_| err(format!("bad line id `{}`", fields[0])))?;
                let from: usize = fields[1]
                    .parse()
                    .map_err(|_| err(format!("bad from bus `{}`", fields[1])))?;
                let to: usize = fields[2]
                    .parse()
                    .map_err(|_| err(format!("bad to bus `{}`", fields[2])))?;
                let r_ohm: f64 = fields[3]
                    .parse()
                    .map_err(|_| err(format!("bad r_ohm `{}`", fields[3])))?;
                let x_ohm: f64 = fields[4]
                    .parse()
                    .map_err(|_| err(format!("bad x_ohm `{}`", fields[4])))?;
                let switch = match fields[5] {
                    "-" => None,
                    s => Some(
                        s.parse::<usize>()
                            .map_err(|_| err(format!("bad switch id `{s}`")))?,
                    ),
                };
                if from == to {
                    return Err(err(format!("line {id} connects bus {from} to itself")));
                }
                if r_ohm == 0.0 && x_ohm == 0.0 {
                    return Err(err(format!("line {id} has zero impedance")));
                }
                line_rows.push((lineno, id, from, to, r_ohm, x_ohm, switch));
            }
            Section::Pmus => {
                if fields.len() != 1 {
                    return Err(err("pmu rows are a single bus id".into()));
                }
                let id: usize = fields[0]
                    .parse()
                    .map_err(|_| err(format!("bad pmu bus `{}`", fields[0])))?;
                pmu_ids.push((lineno, id));
            }
        }
    }

    // Bus ids must be unique and contiguous 1..=N.
    bus_rows.sort_by_key(|(_, b)| b.id);
    let n = bus_rows.len();
    if n == 0 {
        return Err(GridError::Validation("grid has no buses".into()));
    }
    for (i, (_, b)) in bus_rows.iter().enumerate() {
        if b.id != i + 1 {
            return Err(GridError::Validation(format!(
                "bus ids must be contiguous 1..={n}; found id {} at position {}",
                b.id,
                i + 1
            )));
        }
    }
    let n_substations = bus_rows
        .iter()
        .filter(|(_, b)| b.kind == BusKind::Substation)
        .count();
    if n_substations != 1 {
        return Err(GridError::Validation(format!(
            "expected exactly one substation bus, found {n_substations}"
        )));
    }

    let mut buses: Vec<Bus> = bus_rows
        .into_iter()
        .map(|(_, mut b)| {
            b.p_pu = b.p_kw / (1000.0 * base_mva);
            b.q_pu = b.q_kvar / (1000.0 * base_mva);
            b
        })
        .collect();
    // Substation carries no demand of its own.
    for b in buses.iter_mut() {
        if b.kind == BusKind::Substation && (b.p_kw != 0.0 || b.q_kvar != 0.0) {
            return Err(GridError::Validation(format!(
                "substation bus {} must have zero demand",
                b.id
            )));
        }
    }

    let z_base = base_kv * base_kv / base_mva;
    let mut seen_line_ids = HashSet::new();
    let mut lines = Vec::with_capacity(line_rows.len());
    let mut switch_lines: Vec<(usize, usize)> = Vec::new();
    for (lineno, id, from, to, r_ohm, x_ohm, switch) in line_rows {
        if !seen_line_ids.insert(id) {
            return Err(GridError::Validation(format!("duplicate line id {id}")));
        }
        let check_bus = |bus: usize| -> Result<usize, GridError> {
            if bus == 0 || bus > n {
                Err(GridError::Parse {
                    line: lineno,
                    msg: format!("line {id} references unknown bus {bus}"),
                })
            } else {
                Ok(bus - 1)
            }
        };
        let from = check_bus(from)?;
        let to = check_bus(to)?;
        if let Some(s) = switch {
            switch_lines.push((s, lines.len()));
        }
        lines.push(Line {
            id,
            from,
            to,
            r_ohm,
            x_ohm,
            r_pu: r_ohm / z_base,
            x_pu: x_ohm / z_base,
            switch,
        });
    }

    switch_lines.sort();
    for (i, &(sid, _)) in switch_lines.iter().enumerate() {
        if sid != i {
            return Err(GridError::Validation(format!(
                "switch ids must be 0..{} with no gaps or duplicates",
                switch_lines.len()
            )));
        }
    }
    let switches: Vec<Switch> = switch_lines
        .iter()
        .map(|&(id, line)| Switch { id, line })
        .collect();

    let mut pmu_buses = Vec::with_capacity(pmu_ids.len());
    for (lineno, id) in pmu_ids {
        if id == 0 || id > n {
            return Err(GridError::Parse {
                line: lineno,
                msg: format!("pmu references unknown bus {id}"),
            });
        }
        pmu_buses.push(id - 1);
    }
    pmu_buses.sort_unstable();
    pmu_buses.dedup();

    let model = NetworkModel {
        buses,
        lines,
        switches,
        pmu_buses,
        base_kv,
        base_mva,
    };

    let all_closed = model.apply_topology(&TopologyVector::all_closed(model.n_switches()));
    if !all_closed.is_connected() {
        return Err(GridError::Validation(
            "graph with all switches closed is disconnected".into(),
        ));
    }
    Ok(model)
}

/// One switching event of a plan: at `t_sec`, switch `switch_id` takes
/// `status`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchEvent {
    pub t_sec: f64,
    pub switch_id: usize,
    pub closed: bool,
}

/// A switch plan: initial statuses at `t = 0` for every switch plus later
/// events.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchPlan {
    pub events: Vec<SwitchEvent>,
}

impl SwitchPlan {
    /// Topology in force at time `t` for a system with `n_switches` switches.
    /// Events apply to every instant at or after their timestamp.
    pub fn topology_at(&self, t: f64, n_switches: usize) -> TopologyVector {
        let mut topo = TopologyVector::all_open(n_switches);
        for ev in &self.events {
            if ev.t_sec <= t {
                topo.0[ev.switch_id] = ev.closed;
            }
        }
        topo
    }

    pub fn serialize(&self) -> String {
        let mut out = String::from("[events]\n");
        for ev in &self.events {
            let _ = writeln!(
                out,
                "{},{},{}",
                ev.t_sec,
                ev.switch_id,
                if ev.closed { 1 } else { 0 }
            );
        }
        out
    }
}

/// Parses a switch-plan file. Requires an initial-status row at `t_sec = 0`
/// for every switch of the model.
pub fn parse_plan(text: &str, n_switches: usize) -> Result<SwitchPlan, GridError> {
    let mut events = Vec::new();
    let mut in_events = false;
    for (ln, raw) in text.lines().enumerate() {
        let lineno = ln + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "[events]" {
            in_events = true;
            continue;
        }
        if line.starts_with('[') {
            return Err(GridError::Parse {
                line: lineno,
                msg: format!("unknown section `{line}` in plan file"),
            });
        }
        if !in_events {
            return Err(GridError::Parse {
                line: lineno,
                msg: "data row before [events] header".into(),
            });
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(GridError::Parse {
                line: lineno,
                msg: "event rows are `t_sec,switch_id,status`".into(),
            });
        }
        let t_sec: f64 = fields[0].parse().map_err(|_| GridError::Parse {
            line: lineno,
            msg: format!("bad t_sec `{}`", fields[0]),
        })?;
        let switch_id: usize = fields[1].parse().map_err(|_| GridError::Parse {
            line: lineno,
            msg: format!("bad switch id `{}`", fields[1]),
        })?;
        let status: u8 = fields[2].parse().map_err(|_| GridError::Parse {
            line: lineno,
            msg: format!("bad status `{}`", fields[2]),
        })?;
        if switch_id >= n_switches {
            return Err(GridError::Parse {
                line: lineno,
                msg: format!("switch id {switch_id} out of range (model has {n_switches})"),
            });
        }
        if status > 1 {
            return Err(GridError::Parse {
                line: lineno,
                msg: "status must be 0 or 1".into(),
            });
        }
        events.push(SwitchEvent {
            t_sec,
            switch_id,
            closed: status == 1,
        });
    }
    let mut initial = vec![false; n_switches];
    for ev in &events {
        if ev.t_sec == 0.0 {
            initial[ev.switch_id] = true;
        }
    }
    if let Some(missing) = initial.iter().position(|&covered| !covered) {
        return Err(GridError::Validation(format!(
            "plan lacks an initial t_sec=0 status row for switch {missing}"
        )));
    }
    events.sort_by(|a, b| a.t_sec.total_cmp(&b.t_sec));
    Ok(SwitchPlan { events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const TWO_BUS: &str = "\
[meta]
base_kv,12.66
base_mva,10.0
[buses]
1,substation,0,0
2,load,100,60
[lines]
1,1,2,0.1,0.2,-
[pmus]
2
";

    #[test]
    fn parses_minimal_two_bus_grid() {
        let m = parse_grid(TWO_BUS).unwrap();
        assert_eq!(m.n_buses(), 2);
        assert_eq!(m.lines.len(), 1);
        assert_eq!(m.n_switches(), 0);
        assert_eq!(m.buses[0].kind, BusKind::Substation);
        assert_eq!(m.buses[1].kind, BusKind::Load);
        assert_eq!(m.buses[1].p_pu, 100.0 / 10_000.0);
        assert_eq!(m.pmu_buses, vec![1]);
    }

    #[test]
    fn parses_the_bundled_33_bus_fixture() {
        let m = fixtures::ieee33();
        assert_eq!(m.n_buses(), 33);
        assert_eq!(m.lines.len(), 37);
        assert_eq!(m.n_switches(), 5);
        assert_eq!(1u32 << m.n_switches(), 32);
        // Five switchable lines exist and are distinct lines.
        let mut lines: Vec<usize> = m.switches.iter().map(|s| s.line).collect();
        lines.dedup();
        assert_eq!(lines.len(), 5);
        // Total nominal demand matches the published feeder data.
        let total_p: f64 = m.buses.iter().map(|b| b.p_kw).sum();
        let total_q: f64 = m.buses.iter().map(|b| b.q_kvar).sum();
        assert_eq!(total_p, 3715.0);
        assert_eq!(total_q, 2300.0);
    }

    #[test]
    fn disconnected_all_closed_graph_is_rejected() {
        let text = "\
[buses]
1,substation,0,0
2,load,10,5
3,load,10,5
[lines]
1,1,2,0.1,0.1,-
";
        let err = parse_grid(text).unwrap_err();
        assert!(matches!(err, GridError::Validation(_)), "{err}");
    }

    #[test]
    fn duplicate_and_gappy_ids_are_rejected() {
        let dup_bus = "\
[buses]
1,substation,0,0
1,load,10,5
[lines]
1,1,2,0.1,0.1,-
";
        assert!(parse_grid(dup_bus).is_err());

        let gap_switch = "\
[buses]
1,substation,0,0
2,load,10,5
3,load,10,5
[lines]
1,1,2,0.1,0.1,0
2,2,3,0.1,0.1,2
";
        let err = parse_grid(gap_switch).unwrap_err();
        assert!(matches!(err, GridError::Validation(_)), "{err}");
    }

    #[test]
    fn zero_impedance_line_is_a_parse_error() {
        let text = "\
[buses]
1,substation,0,0
2,load,10,5
[lines]
1,1,2,0,0,-
";
        let err = parse_grid(text).unwrap_err();
        assert!(matches!(err, GridError::Parse { .. }), "{err}");
    }

    #[test]
    fn admittance_of_simple_branches() {
        assert_eq!(line_admittance(1.0, 0.0), (1.0, 0.0));
        assert_eq!(line_admittance(0.0, 1.0), (0.0, -1.0));
        assert_eq!(line_admittance(1.0, 1.0), (0.5, -0.5));
    }

    #[test]
    fn radial_topology_is_a_connected_tree() {
        let m = fixtures::ieee33();
        let g = m.apply_topology(&TopologyVector::all_open(5));
        assert!(g.is_connected());
        assert_eq!(g.lines.len(), 32);
        assert_eq!(g.loop_count(), 0);
    }

    #[test]
    fn meshed_topology_11100_has_three_loops() {
        let m = fixtures::ieee33();
        let topo = TopologyVector(vec![true, true, true, false, false]);
        let g = m.apply_topology(&topo);
        assert!(g.is_connected());
        assert_eq!(g.loop_count(), 3);
    }

    #[test]
    fn all_closed_loop_count_matches_spanning_tree_oracle() {
        let m = fixtures::ieee33();
        let g = m.apply_topology(&TopologyVector::all_closed(5));
        assert!(g.is_connected());

        // Oracle: grow a BFS spanning tree over energized lines and count the
        // edges left over; every such edge closes one independent cycle.
        let mut visited = vec![false; m.n_buses()];
        let mut tree_edges = 0usize;
        let mut queue = std::collections::VecDeque::from([0usize]);
        visited[0] = true;
        while let Some(b) = queue.pop_front() {
            for &li in &g.lines {
                let l = &m.lines[li];
                let other = if l.from == b {
                    l.to
                } else if l.to == b {
                    l.from
                } else {
                    continue;
                };
                if !visited[other] {
                    visited[other] = true;
                    tree_edges += 1;
                    queue.push_back(other);
                }
            }
        }
        let oracle_loops = g.lines.len() - tree_edges;
        assert_eq!(g.loop_count(), oracle_loops);
        assert_eq!(g.loop_count(), m.n_switches());
    }

    #[test]
    fn serialization_round_trips_field_by_field() {
        let m = fixtures::ieee33();
        let re = parse_grid(&m.serialize()).unwrap();
        assert_eq!(m, re);
    }

    #[test]
    fn per_unit_conversion_round_trips() {
        let m = fixtures::ieee33();
        for kw in [0.0, 60.0, 420.0, 3715.0, 12.345678901234] {
            let back = m.pu_to_kw(m.kw_to_pu(kw));
            assert!((back - kw).abs() <= 1e-12 * kw.abs().max(1.0));
        }
    }

    #[test]
    fn plan_requires_initial_statuses() {
        let text = "[events]\n0,0,0\n440,1,1\n";
        let err = parse_plan(text, 2).unwrap_err();
        assert!(matches!(err, GridError::Validation(_)), "{err}");
        let ok = parse_plan("[events]\n0,0,0\n0,1,0\n440,1,1\n", 2).unwrap();
        assert_eq!(ok.topology_at(0.0, 2), TopologyVector(vec![false, false]));
        assert_eq!(ok.topology_at(439.9, 2), TopologyVector(vec![false, false]));
        assert_eq!(ok.topology_at(440.0, 2), TopologyVector(vec![false, true]));
    }

    #[test]
    fn closing_more_switches_never_disconnects_pairs() {
        let m = fixtures::ieee33();
        for bits in 0u32..32 {
            let base = TopologyVector::from_bits(bits, 5);
            let pairs = m.apply_topology(&base).connected_pairs();
            for s in 0..5 {
                if !base.0[s] {
                    let mut more = base.clone();
                    more.0[s] = true;
                    assert!(m.apply_topology(&more).connected_pairs() >= pairs);
                }
            }
        }
    }
}
