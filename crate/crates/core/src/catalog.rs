//! The 27-policy lattice and its model-based performance metrics.
//!
//! Each policy combines three financing levers (sales tax, transit fare,
//! driver fee), each at one of three levels. Policies are numbered
//! `9 * tax + 3 * fare + fee` with levels indexed low = 0, medium = 1,
//! high = 2. The bundled tables carry the published per-policy metrics for
//! Chicago and Houston.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const POLICY_COUNT: usize = 27;

/// Policy 12: 1.0% tax, $1.25 fare, no driver fee.
pub const STATUS_QUO: PolicyId = PolicyId(12);

const TABLE_HEADER: [&str; 12] = [
    "id",
    "tax_rate",
    "transit_fare",
    "driver_fee",
    "drive_time",
    "bus_time",
    "drive_cost",
    "bus_cost",
    "transit_pct",
    "u_total",
    "u_min",
    "gini",
];

const CHICAGO_TABLE: &str = include_str!("../data/policies_chicago.csv");
const HOUSTON_TABLE: &str = include_str!("../data/policies_houston.csv");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("failed to read policy table: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed policy table: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected header {found:?}; expected {expected}")]
    Header { found: Vec<String>, expected: String },
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("row {row}: duplicate policy id {id}")]
    DuplicateId { row: usize, id: PolicyId },
    #[error("expected 27 policies, found {found}")]
    Count { found: usize },
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("unknown city `{0}`")]
    UnknownCity(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum City {
    Chicago,
    Houston,
}

impl City {
    pub const ALL: [City; 2] = [City::Chicago, City::Houston];

    pub fn name(self) -> &'static str {
        match self {
            City::Chicago => "chicago",
            City::Houston => "houston",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            City::Chicago => "Chicago",
            City::Houston => "Houston",
        }
    }

    fn bundled_table(self) -> &'static str {
        match self {
            City::Chicago => CHICAGO_TABLE,
            City::Houston => HOUSTON_TABLE,
        }
    }
}

impl fmt::Display for City {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for City {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "chicago" | "chi" => Ok(City::Chicago),
            "houston" | "hou" => Ok(City::Houston),
            _ => Err(CatalogError::UnknownCity(s.to_string())),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lever {
    Tax,
    Fare,
    Fee,
}

impl Lever {
    pub const ALL: [Lever; 3] = [Lever::Tax, Lever::Fare, Lever::Fee];

    pub fn name(self) -> &'static str {
        match self {
            Lever::Tax => "tax",
            Lever::Fare => "fare",
            Lever::Fee => "fee",
        }
    }

    /// Numeric values of the low, medium and high levels (tax in percent,
    /// fare and fee in dollars per trip).
    pub fn level_values(self) -> [f64; 3] {
        match self {
            Lever::Tax => [0.5, 1.0, 1.5],
            Lever::Fare => [0.75, 1.25, 1.75],
            Lever::Fee => [0.0, 0.5, 1.0],
        }
    }

    pub fn value(self, level: Level) -> f64 {
        self.level_values()[level.index()]
    }

    pub fn min_value(self) -> f64 {
        self.level_values()[0]
    }

    pub fn max_value(self) -> f64 {
        self.level_values()[2]
    }

    /// Exact match of `value` against the level set.
    pub fn level_of(self, value: f64) -> Option<Level> {
        self.level_values()
            .iter()
            .position(|&v| v == value)
            .map(Level::from_index)
    }
}

impl fmt::Display for Lever {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Lever {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tax" | "tax_rate" => Ok(Lever::Tax),
            "fare" | "transit_fare" => Ok(Lever::Fare),
            "fee" | "driver_fee" => Ok(Lever::Fee),
            other => Err(format!("unknown lever `{other}`")),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Low,
    Medium,
    High,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Low, Level::Medium, Level::High];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Panics on indices above 2.
    pub fn from_index(index: usize) -> Level {
        Level::ALL[index]
    }

    pub fn name(self) -> &'static str {
        match self {
            Level::Low => "low",
            Level::Medium => "medium",
            Level::High => "high",
        }
    }
}

/// Index of a policy in the 27-point lattice.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct PolicyId(u8);

impl PolicyId {
    pub fn new(raw: u32) -> Option<PolicyId> {
        (raw < POLICY_COUNT as u32).then_some(PolicyId(raw as u8))
    }

    pub fn get(self) -> u32 {
        u32::from(self.0)
    }

    pub fn index(self) -> usize {
        usize::from(self.0)
    }

    pub fn all() -> impl Iterator<Item = PolicyId> + Clone {
        (0..POLICY_COUNT as u8).map(PolicyId)
    }

    pub fn from_levels(tax: Level, fare: Level, fee: Level) -> PolicyId {
        PolicyId((9 * tax.index() + 3 * fare.index() + fee.index()) as u8)
    }

    /// Inverse of [`PolicyId::from_levels`], ordered (tax, fare, fee).
    pub fn levels(self) -> [Level; 3] {
        let i = self.index();
        [
            Level::from_index(i / 9),
            Level::from_index((i / 3) % 3),
            Level::from_index(i % 3),
        ]
    }

    pub fn level(self, lever: Lever) -> Level {
        self.levels()[lever as usize]
    }

    pub fn lever_value(self, lever: Lever) -> f64 {
        lever.value(self.level(lever))
    }
}

impl TryFrom<u32> for PolicyId {
    type Error = String;

    fn try_from(raw: u32) -> Result<Self, Self::Error> {
        PolicyId::new(raw).ok_or_else(|| format!("policy id {raw} outside [0, 26]"))
    }
}

impl From<PolicyId> for u32 {
    fn from(id: PolicyId) -> u32 {
        id.get()
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn policy_id(tax: Level, fare: Level, fee: Level) -> PolicyId {
    PolicyId::from_levels(tax, fare, fee)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub id: PolicyId,
    /// Percent.
    pub tax: f64,
    /// Dollars per trip.
    pub fare: f64,
    /// Dollars per trip.
    pub fee: f64,
}

impl Policy {
    pub fn from_id(id: PolicyId) -> Policy {
        Policy {
            id,
            tax: id.lever_value(Lever::Tax),
            fare: id.lever_value(Lever::Fare),
            fee: id.lever_value(Lever::Fee),
        }
    }

    pub fn lever(&self, lever: Lever) -> f64 {
        match lever {
            Lever::Tax => self.tax,
            Lever::Fare => self.fare,
            Lever::Fee => self.fee,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyMetrics {
    /// Minutes.
    pub drive_time: f64,
    /// Minutes.
    pub bus_time: f64,
    /// Dollars per trip.
    pub drive_cost: f64,
    /// Dollars per trip.
    pub bus_cost: f64,
    /// Transit mode share in percent.
    pub transit_share: f64,
    /// Total utility over all travelers.
    pub u_total: f64,
    /// Minimum utility over travelers.
    pub u_min: f64,
    pub gini: f64,
}

impl PolicyMetrics {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::DriveTime => self.drive_time,
            Metric::BusTime => self.bus_time,
            Metric::DriveCost => self.drive_cost,
            Metric::BusCost => self.bus_cost,
            Metric::TransitPct => self.transit_share,
            Metric::UTotal => self.u_total,
            Metric::UMin => self.u_min,
            Metric::Gini => self.gini,
        }
    }

    fn validate(&self) -> Result<(), String> {
        let fields = [
            ("drive_time", self.drive_time),
            ("bus_time", self.bus_time),
            ("drive_cost", self.drive_cost),
            ("bus_cost", self.bus_cost),
            ("transit_pct", self.transit_share),
            ("u_total", self.u_total),
            ("u_min", self.u_min),
            ("gini", self.gini),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(format!("{name} is not finite"));
        }
        for (name, v) in &fields[..4] {
            if *v < 0.0 {
                return Err(format!("{name} = {v} is negative"));
            }
        }
        if !(0.0..=100.0).contains(&self.transit_share) {
            return Err(format!("transit_pct = {} outside [0, 100]", self.transit_share));
        }
        if !(0.0..=1.0).contains(&self.gini) {
            return Err(format!("gini = {} outside [0, 1]", self.gini));
        }
        Ok(())
    }
}

/// Performance metric columns, addressed by their table header name.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    DriveTime,
    BusTime,
    DriveCost,
    BusCost,
    TransitPct,
    UTotal,
    UMin,
    Gini,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::DriveTime,
        Metric::BusTime,
        Metric::DriveCost,
        Metric::BusCost,
        Metric::TransitPct,
        Metric::UTotal,
        Metric::UMin,
        Metric::Gini,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::DriveTime => "drive_time",
            Metric::BusTime => "bus_time",
            Metric::DriveCost => "drive_cost",
            Metric::BusCost => "bus_cost",
            Metric::TransitPct => "transit_pct",
            Metric::UTotal => "u_total",
            Metric::UMin => "u_min",
            Metric::Gini => "gini",
        }
    }
}

impl FromStr for Metric {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| CatalogError::UnknownMetric(s.to_string()))
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "max" | "maximize" => Ok(Direction::Maximize),
            "min" | "minimize" => Ok(Direction::Minimize),
            other => Err(format!("unknown direction `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub policy: Policy,
    pub metrics: PolicyMetrics,
}

/// Policies with their performance metrics for one city. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Catalog {
    city: City,
    entries: BTreeMap<PolicyId, CatalogEntry>,
}

#[derive(Debug, Deserialize)]
struct TableRow {
    id: i64,
    tax_rate: f64,
    transit_fare: f64,
    driver_fee: f64,
    drive_time: f64,
    bus_time: f64,
    drive_cost: f64,
    bus_cost: f64,
    transit_pct: f64,
    u_total: f64,
    u_min: f64,
    gini: f64,
}

impl Catalog {
    /// The table shipped with the crate for `city`.
    pub fn bundled(city: City) -> Catalog {
        Catalog::from_reader(city, city.bundled_table().as_bytes())
            .expect("bundled policy table is valid")
    }

    pub fn load(city: City, path: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
        let file = std::fs::File::open(path)?;
        Catalog::from_reader(city, file)
    }

    pub fn from_reader<R: Read>(city: City, reader: R) -> Result<Catalog, CatalogError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != TABLE_HEADER {
            return Err(CatalogError::Header {
                found: header,
                expected: TABLE_HEADER.join(","),
            });
        }
        let mut entries = BTreeMap::new();
        for (i, record) in rdr.deserialize::<TableRow>().enumerate() {
            // data rows are numbered from 1, after the header
            let row = i + 1;
            let r = record.map_err(|e| CatalogError::Row { row, message: e.to_string() })?;
            let entry = parse_row(&r).map_err(|message| CatalogError::Row { row, message })?;
            let id = entry.policy.id;
            if entries.insert(id, entry).is_some() {
                return Err(CatalogError::DuplicateId { row, id });
            }
        }
        if entries.len() != POLICY_COUNT {
            return Err(CatalogError::Count { found: entries.len() });
        }
        Ok(Catalog { city, entries })
    }

    /// Builds a catalog over an arbitrary subset of the lattice. Lever values
    /// and metric ranges are validated; cardinality is not.
    pub fn from_entries(
        city: City,
        entries: impl IntoIterator<Item = (PolicyId, PolicyMetrics)>,
    ) -> Result<Catalog, CatalogError> {
        let mut map = BTreeMap::new();
        for (row, (id, metrics)) in entries.into_iter().enumerate() {
            metrics
                .validate()
                .map_err(|message| CatalogError::Row { row: row + 1, message })?;
            let entry = CatalogEntry { policy: Policy::from_id(id), metrics };
            if map.insert(id, entry).is_some() {
                return Err(CatalogError::DuplicateId { row: row + 1, id });
            }
        }
        Ok(Catalog { city, entries: map })
    }

    pub fn city(&self) -> City {
        self.city
    }

    pub fn status_quo(&self) -> PolicyId {
        STATUS_QUO
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: PolicyId) -> Option<&CatalogEntry> {
        self.entries.get(&id)
    }

    pub fn policy(&self, id: PolicyId) -> Option<&Policy> {
        self.entries.get(&id).map(|e| &e.policy)
    }

    pub fn metrics(&self, id: PolicyId) -> Option<&PolicyMetrics> {
        self.entries.get(&id).map(|e| &e.metrics)
    }

    /// Entries in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.values()
    }

    /// Lowest id attaining the maximum of `metric`.
    pub fn argmax(&self, metric: Metric) -> Option<PolicyId> {
        self.extremum(metric, Direction::Maximize)
    }

    /// Lowest id attaining the minimum of `metric`.
    pub fn argmin(&self, metric: Metric) -> Option<PolicyId> {
        self.extremum(metric, Direction::Minimize)
    }

    fn extremum(&self, metric: Metric, direction: Direction) -> Option<PolicyId> {
        let mut best: Option<(PolicyId, f64)> = None;
        for e in self.entries.values() {
            let v = e.metrics.get(metric);
            let better = match best {
                None => true,
                Some((_, b)) => match direction {
                    Direction::Maximize => v > b,
                    Direction::Minimize => v < b,
                },
            };
            if better {
                best = Some((e.policy.id, v));
            }
        }
        best.map(|(id, _)| id)
    }
}

fn parse_row(r: &TableRow) -> Result<CatalogEntry, String> {
    let id = u32::try_from(r.id)
        .ok()
        .and_then(PolicyId::new)
        .ok_or_else(|| format!("policy id {} outside [0, 26]", r.id))?;
    let tax = Lever::Tax
        .level_of(r.tax_rate)
        .ok_or_else(|| format!("tax_rate {} is not a lever level", r.tax_rate))?;
    let fare = Lever::Fare
        .level_of(r.transit_fare)
        .ok_or_else(|| format!("transit_fare {} is not a lever level", r.transit_fare))?;
    let fee = Lever::Fee
        .level_of(r.driver_fee)
        .ok_or_else(|| format!("driver_fee {} is not a lever level", r.driver_fee))?;
    let expected = PolicyId::from_levels(tax, fare, fee);
    if expected != id {
        return Err(format!(
            "policy id {id} does not match its levers ({}, {}, {}) which encode id {expected}",
            r.tax_rate, r.transit_fare, r.driver_fee
        ));
    }
    let metrics = PolicyMetrics {
        drive_time: r.drive_time,
        bus_time: r.bus_time,
        drive_cost: r.drive_cost,
        bus_cost: r.bus_cost,
        transit_share: r.transit_pct,
        u_total: r.u_total,
        u_min: r.u_min,
        gini: r.gini,
    };
    metrics.validate()?;
    Ok(CatalogEntry { policy: Policy::from_id(id), metrics })
}

/// Policy maximizing total utility; ties go to the lowest id.
pub fn utilitarian_optimum(catalog: &Catalog) -> Option<PolicyId> {
    catalog.argmax(Metric::UTotal)
}

/// Policy maximizing the minimum utility; ties go to the lowest id.
pub fn egalitarian_optimum(catalog: &Catalog) -> Option<PolicyId> {
    catalog.argmax(Metric::UMin)
}

/// Non-dominated policies in the plane of `x_metric` (maximized) against
/// `y_metric` (maximized or minimized), sorted by x ascending.
///
/// A policy is dominated when another is at least as good on both axes and
/// strictly better on one. Policies equal on both axes keep only the lowest id.
pub fn pareto_frontier(
    catalog: &Catalog,
    x_metric: Metric,
    y_metric: Metric,
    y_direction: Direction,
) -> Vec<PolicyId> {
    let points: Vec<(PolicyId, f64, f64)> = catalog
        .iter()
        .map(|e| {
            let y = e.metrics.get(y_metric);
            let y = match y_direction {
                Direction::Maximize => y,
                Direction::Minimize => -y,
            };
            (e.policy.id, e.metrics.get(x_metric), y)
        })
        .collect();

    let mut frontier: Vec<(PolicyId, f64)> = points
        .iter()
        .filter(|&&(id, x, y)| {
            !points.iter().any(|&(other, ox, oy)| {
                let weakly = ox >= x && oy >= y;
                let strictly = ox > x || oy > y;
                let duplicate = ox == x && oy == y && other < id;
                (weakly && strictly) || duplicate
            })
        })
        .map(|&(id, x, _)| (id, x))
        .collect();
    frontier.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    frontier.into_iter().map(|(id, _)| id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(raw: u32) -> PolicyId {
        PolicyId::new(raw).unwrap()
    }

    fn metrics(u_total: f64, u_min: f64, gini: f64) -> PolicyMetrics {
        PolicyMetrics {
            drive_time: 20.0,
            bus_time: 50.0,
            drive_cost: 5.0,
            bus_cost: 1.0,
            transit_share: 30.0,
            u_total,
            u_min,
            gini,
        }
    }

    #[test]
    fn policy_id_matches_table_ordering() {
        assert_eq!(policy_id(Level::Low, Level::Low, Level::Low), id(0));
        assert_eq!(policy_id(Level::Medium, Level::Low, Level::Medium), id(10));
        assert_eq!(policy_id(Level::High, Level::High, Level::High), id(26));
    }

    #[test]
    fn policy_id_round_trips() {
        for p in PolicyId::all() {
            let [t, r, f] = p.levels();
            assert_eq!(PolicyId::from_levels(t, r, f), p);
        }
        let policy = Policy::from_id(id(10));
        assert_eq!((policy.tax, policy.fare, policy.fee), (1.0, 0.75, 0.5));
    }

    #[test]
    fn bundled_rows_match_published_values() {
        let chi = Catalog::bundled(City::Chicago);
        let m = chi.metrics(STATUS_QUO).unwrap();
        assert_eq!((m.u_total, m.u_min, m.gini), (950.1400, 0.2884, 0.1219));
        let hou = Catalog::bundled(City::Houston);
        let m = hou.metrics(id(20)).unwrap();
        assert_eq!((m.u_total, m.u_min, m.gini), (676.1273, 0.3470, 0.1135));
    }

    #[test]
    fn short_table_is_rejected() {
        let table: String = CHICAGO_TABLE.lines().take(27).map(|l| format!("{l}\n")).collect();
        let err = Catalog::from_reader(City::Chicago, table.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("expected 27 policies"), "{err}");
    }

    #[test]
    fn duplicate_row_is_rejected() {
        let mut table: String = CHICAGO_TABLE.lines().take(27).map(|l| format!("{l}\n")).collect();
        table.push_str(CHICAGO_TABLE.lines().nth(1).unwrap());
        let err = Catalog::from_reader(City::Chicago, table.as_bytes()).unwrap_err();
        assert!(matches!(err, CatalogError::DuplicateId { row: 27, .. }), "{err}");
    }

    #[test]
    fn out_of_range_metric_names_the_row() {
        let table = CHICAGO_TABLE.replace("0.2093,0.1544", "0.2093,1.5544");
        let err = Catalog::from_reader(City::Chicago, table.as_bytes()).unwrap_err();
        assert!(matches!(err, CatalogError::Row { row: 1, .. }), "{err}");
        assert!(err.to_string().contains("gini"));
    }

    #[test]
    fn mislabelled_id_is_rejected() {
        let table = CHICAGO_TABLE.replacen("\n1,0.5,0.75,0.5", "\n1,0.5,0.75,1", 1);
        let err = Catalog::from_reader(City::Chicago, table.as_bytes()).unwrap_err();
        assert!(matches!(err, CatalogError::Row { row: 2, .. }), "{err}");
    }

    #[test]
    fn optima_of_bundled_tables() {
        let chi = Catalog::bundled(City::Chicago);
        assert_eq!(utilitarian_optimum(&chi), Some(id(19)));
        assert_eq!(egalitarian_optimum(&chi), Some(id(20)));
        let hou = Catalog::bundled(City::Houston);
        assert_eq!(utilitarian_optimum(&hou), Some(id(20)));
        assert_eq!(egalitarian_optimum(&hou), Some(id(20)));
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let cat = Catalog::from_entries(
            City::Chicago,
            PolicyId::all().map(|p| (p, metrics(100.0, 0.3, 0.1))),
        )
        .unwrap();
        assert_eq!(utilitarian_optimum(&cat), Some(id(0)));
        let single = Catalog::from_entries(City::Chicago, [(id(7), metrics(1.0, 0.2, 0.1))]).unwrap();
        assert_eq!(egalitarian_optimum(&single), Some(id(7)));
    }

    #[test]
    fn frontier_examples() {
        let chi = Catalog::bundled(City::Chicago);
        let f = pareto_frontier(&chi, Metric::UTotal, Metric::UMin, Direction::Maximize);
        assert!(f.contains(&id(19)) && f.contains(&id(20)));
        assert!(!f.contains(&STATUS_QUO));
        let f = pareto_frontier(&chi, Metric::UTotal, Metric::Gini, Direction::Minimize);
        assert!(f.contains(&id(20)));

        let two = Catalog::from_entries(
            City::Chicago,
            [(id(3), metrics(10.0, 0.5, 0.1)), (id(4), metrics(9.0, 0.4, 0.1))],
        )
        .unwrap();
        assert_eq!(pareto_frontier(&two, Metric::UTotal, Metric::UMin, Direction::Maximize), vec![id(3)]);
    }

    #[test]
    fn frontier_keeps_lowest_of_exact_ties() {
        let cat = Catalog::from_entries(
            City::Houston,
            [(id(6), metrics(10.0, 0.5, 0.1)), (id(2), metrics(10.0, 0.5, 0.1))],
        )
        .unwrap();
        assert_eq!(pareto_frontier(&cat, Metric::UTotal, Metric::UMin, Direction::Maximize), vec![id(2)]);
    }

    #[test]
    fn metric_names_parse() {
        assert_eq!("u_total".parse::<Metric>().unwrap(), Metric::UTotal);
        assert_eq!("Transit-Pct".parse::<Metric>().unwrap(), Metric::TransitPct);
        assert!("utility".parse::<Metric>().is_err());
    }
}
