//! Experiment manifests, house configs and CSV interchange.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::milp::{BnbConfig, Branching};
use crate::model::{ForecastSet, IntervalRule, Variant, ZoneSpec};
use crate::thermal::HouseSpec;
use crate::uncertainty::{ErrorHistory, RadiusMode, StreamId};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("{path}: {what} has {got} rows, expected {expected}")]
    Length {
        path: PathBuf,
        what: String,
        got: usize,
        expected: usize,
    },
    #[error("house {id}: {message}")]
    Unit { id: usize, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ConfigError + '_ {
    move |source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn invalid(path: &Path, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// One house as written in the config file. Capacitances are given in
/// exactly one of kWh/°C or kJ/°C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HouseRecord {
    pub id: usize,
    pub r_degc_per_kw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_kwh_per_degc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_kj_per_degc: Option<f64>,
    pub r_w_degc_per_kw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_w_kwh_per_degc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_w_kj_per_degc: Option<f64>,
    pub p_hp_kw: f64,
    pub cop: f64,
    pub eff_w2h: f64,
    pub t0_degc: f64,
    pub tw0_degc: f64,
    pub t_lo_degc: f64,
    pub t_hi_degc: f64,
    pub tw_lo_degc: f64,
    pub tw_hi_degc: f64,
}

fn capacitance(id: usize, name: &str, kwh: Option<f64>, kj: Option<f64>) -> Result<f64, ConfigError> {
    match (kwh, kj) {
        (Some(v), None) => Ok(v),
        (None, Some(v)) => Ok(v / 3600.0),
        (Some(_), Some(_)) => Err(ConfigError::Unit {
            id,
            message: format!("{name} given in both kWh/degC and kJ/degC"),
        }),
        (None, None) => Err(ConfigError::Unit {
            id,
            message: format!("{name} missing; use {name}_kwh_per_degc or {name}_kj_per_degc"),
        }),
    }
}

impl HouseRecord {
    pub fn to_spec(&self) -> Result<HouseSpec, ConfigError> {
        let spec = HouseSpec {
            id: self.id,
            r: self.r_degc_per_kw,
            c: capacitance(self.id, "c", self.c_kwh_per_degc, self.c_kj_per_degc)?,
            r_w: self.r_w_degc_per_kw,
            c_w: capacitance(self.id, "c_w", self.c_w_kwh_per_degc, self.c_w_kj_per_degc)?,
            p_hp: self.p_hp_kw,
            cop: self.cop,
            eff_w2h: self.eff_w2h,
            t0: self.t0_degc,
            tw0: self.tw0_degc,
            t_lo: self.t_lo_degc,
            t_hi: self.t_hi_degc,
            tw_lo: self.tw_lo_degc,
            tw_hi: self.tw_hi_degc,
        };
        spec.validate().map_err(|e| ConfigError::Unit {
            id: self.id,
            message: e.to_string(),
        })?;
        Ok(spec)
    }

    pub fn from_spec(spec: &HouseSpec) -> Self {
        Self {
            id: spec.id,
            r_degc_per_kw: spec.r,
            c_kwh_per_degc: Some(spec.c),
            c_kj_per_degc: None,
            r_w_degc_per_kw: spec.r_w,
            c_w_kwh_per_degc: Some(spec.c_w),
            c_w_kj_per_degc: None,
            p_hp_kw: spec.p_hp,
            cop: spec.cop,
            eff_w2h: spec.eff_w2h,
            t0_degc: spec.t0,
            tw0_degc: spec.tw0,
            t_lo_degc: spec.t_lo,
            t_hi_degc: spec.t_hi,
            tw_lo_degc: spec.tw_lo,
            tw_hi_degc: spec.tw_hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HousesFile {
    pub house: Vec<HouseRecord>,
}

pub fn parse_houses(text: &str, path: &Path) -> Result<Vec<HouseSpec>, ConfigError> {
    let file: HousesFile = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let specs = file
        .house
        .iter()
        .map(HouseRecord::to_spec)
        .collect::<Result<Vec<_>, _>>()?;
    let mut ids: Vec<usize> = specs.iter().map(|h| h.id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid(path, "duplicate house id"));
    }
    if specs.is_empty() {
        return Err(invalid(path, "no houses"));
    }
    Ok(specs)
}

pub fn write_houses(houses: &[HouseSpec]) -> String {
    let file = HousesFile {
        house: houses.iter().map(HouseRecord::from_spec).collect(),
    };
    toml::to_string(&file).expect("houses serialise")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneRecord {
    pub name: String,
    pub houses: Vec<usize>,
    pub trans_capacity_kw: f64,
    pub psi_per_kw: f64,
}

impl ZoneRecord {
    fn to_spec(&self, path: &Path) -> Result<ZoneSpec, ConfigError> {
        if !(self.trans_capacity_kw.is_finite() && self.trans_capacity_kw > 0.0) {
            return Err(invalid(
                path,
                format!("zone {}: trans_capacity_kw must be positive", self.name),
            ));
        }
        if !(self.psi_per_kw.is_finite() && self.psi_per_kw >= 0.0) {
            return Err(invalid(
                path,
                format!("zone {}: psi_per_kw must be nonnegative", self.name),
            ));
        }
        if self.houses.is_empty() {
            return Err(invalid(path, format!("zone {} has no houses", self.name)));
        }
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(invalid(
                path,
                format!("zone name {:?} must be ASCII alphanumeric", self.name),
            ));
        }
        Ok(ZoneSpec {
            name: self.name.clone(),
            houses: self.houses.clone(),
            trans_capacity: self.trans_capacity_kw,
            psi: self.psi_per_kw,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskSection {
    pub beta_power: f64,
    pub beta_temp: f64,
    #[serde(default = "default_radius_mode")]
    pub radius_mode: RadiusMode,
    /// Reuse the upper temperature margin for lower comfort rows.
    #[serde(default)]
    pub same_lower: bool,
}

fn default_radius_mode() -> RadiusMode {
    RadiusMode::Constant
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthSection {
    #[serde(default = "default_power_bw")]
    pub power_kw: f64,
    #[serde(default = "default_temp_bw")]
    pub temperature_degc: f64,
}

fn default_power_bw() -> f64 {
    crate::uncertainty::DEFAULT_POWER_BANDWIDTH
}

fn default_temp_bw() -> f64 {
    crate::uncertainty::DEFAULT_TEMPERATURE_BANDWIDTH
}

impl Default for BandwidthSection {
    fn default() -> Self {
        Self {
            power_kw: default_power_bw(),
            temperature_degc: default_temp_bw(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_gap")]
    pub gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit_s: Option<f64>,
    #[serde(default = "default_node_limit")]
    pub node_limit: usize,
    #[serde(default)]
    pub branching: Branching,
    #[serde(default)]
    pub cyclic_switching: bool,
}

fn default_gap() -> f64 {
    0.01
}

fn default_node_limit() -> usize {
    BnbConfig::default().node_limit
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            gap: default_gap(),
            time_limit_s: None,
            node_limit: default_node_limit(),
            branching: Branching::default(),
            cyclic_switching: false,
        }
    }
}

impl SolverSection {
    pub fn bnb(&self) -> BnbConfig {
        BnbConfig {
            gap_tol: self.gap,
            time_limit: self.time_limit_s.map(std::time::Duration::from_secs_f64),
            node_limit: self.node_limit,
            branching: self.branching,
            ..BnbConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSection {
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_fine_dt")]
    pub fine_dt_s: f64,
}

fn default_fine_dt() -> f64 {
    5.0
}

/// A complete experiment description. Relative paths are resolved
/// against the directory holding the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub houses: PathBuf,
    pub forecast: PathBuf,
    pub price: PathBuf,
    pub errors: PathBuf,
    pub variant: Variant,
    pub horizon: usize,
    pub slot_hours: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub zone: Vec<ZoneRecord>,
    pub risk: RiskSection,
    #[serde(default)]
    pub bandwidth: BandwidthSection,
    #[serde(default)]
    pub interval: IntervalRule,
    #[serde(default)]
    pub solver: SolverSection,
    pub evaluation: EvaluationSection,
}

impl Manifest {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let m: Manifest = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        m.check(path)?;
        Ok(m)
    }

    pub fn check(&self, path: &Path) -> Result<(), ConfigError> {
        if self.horizon < 3 {
            return Err(invalid(path, "horizon must be at least 3 slots"));
        }
        if !(self.slot_hours.is_finite() && self.slot_hours > 0.0) {
            return Err(invalid(path, "slot_hours must be positive"));
        }
        for (name, beta) in [("beta_power", self.risk.beta_power), ("beta_temp", self.risk.beta_temp)] {
            if !(beta > 0.0 && beta <= 1.0) {
                return Err(invalid(path, format!("{name} = {beta} is outside (0, 1]")));
            }
        }
        if !(self.bandwidth.power_kw > 0.0 && self.bandwidth.temperature_degc > 0.0) {
            return Err(invalid(path, "bandwidths must be positive"));
        }
        if !(self.solver.gap >= 0.0) {
            return Err(invalid(path, "solver gap must be nonnegative"));
        }
        if self.evaluation.trials == 0 {
            return Err(invalid(path, "evaluation needs at least one trial"));
        }
        if self.zone.is_empty() {
            return Err(invalid(path, "at least one zone is required"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serialises")
    }

    pub fn zones(&self, path: &Path) -> Result<Vec<ZoneSpec>, ConfigError> {
        self.zone.iter().map(|z| z.to_spec(path)).collect()
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn headers(rdr: &mut csv::Reader<&[u8]>, path: &Path) -> Result<Vec<String>, ConfigError> {
    Ok(rdr
        .headers()
        .map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .iter()
        .map(String::from)
        .collect())
}

fn number(field: &str, path: &Path, line: usize, column: &str) -> Result<f64, ConfigError> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConfigError::Parse {
            path: path.to_path_buf(),
            message: format!("line {line}: column {column}: {field:?} is not a finite number"),
        })
}

fn slot_index(field: &str, path: &Path, line: usize, expected: usize) -> Result<usize, ConfigError> {
    let slot: usize = field.parse().map_err(|_| ConfigError::Parse {
        path: path.to_path_buf(),
        message: format!("line {line}: slot {field:?} is not an index"),
    })?;
    if slot != expected {
        return Err(ConfigError::Parse {
            path: path.to_path_buf(),
            message: format!("line {line}: slot {slot} out of order, expected {expected}"),
        });
    }
    Ok(slot)
}

/// `slot,t_out_c,p_sum_kw_<zone>...` with one net-load column per zone.
pub fn parse_forecast(
    text: &str,
    path: &Path,
    zones: &[ZoneSpec],
    horizon: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), ConfigError> {
    let mut rdr = csv_reader(text);
    let head = headers(&mut rdr, path)?;
    let want: Vec<String> = ["slot".to_string(), "t_out_c".to_string()]
        .into_iter()
        .chain(zones.iter().map(|z| format!("p_sum_kw_{}", z.name)))
        .collect();
    if head != want {
        return Err(invalid(path, format!("header {head:?}, expected {want:?}")));
    }
    let mut t_out = Vec::new();
    let mut load = vec![Vec::new(); zones.len()];
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        slot_index(&rec[0], path, line, n)?;
        t_out.push(number(&rec[1], path, line, "t_out_c")?);
        for (z, series) in load.iter_mut().enumerate() {
            series.push(number(&rec[2 + z], path, line, &want[2 + z])?);
        }
    }
    if t_out.len() != horizon {
        return Err(ConfigError::Length {
            path: path.to_path_buf(),
            what: "forecast".into(),
            got: t_out.len(),
            expected: horizon,
        });
    }
    Ok((t_out, load))
}

/// `slot,price_per_kwh`.
pub fn parse_price(text: &str, path: &Path, horizon: usize) -> Result<Vec<f64>, ConfigError> {
    let mut rdr = csv_reader(text);
    let head = headers(&mut rdr, path)?;
    if head != ["slot", "price_per_kwh"] {
        return Err(invalid(
            path,
            format!("header {head:?}, expected [\"slot\", \"price_per_kwh\"]"),
        ));
    }
    let mut price = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        slot_index(&rec[0], path, line, n)?;
        let p = number(&rec[1], path, line, "price_per_kwh")?;
        if p < 0.0 {
            return Err(invalid(path, format!("line {line}: negative price {p}")));
        }
        price.push(p);
    }
    if price.len() != horizon {
        return Err(ConfigError::Length {
            path: path.to_path_buf(),
            what: "price".into(),
            got: price.len(),
            expected: horizon,
        });
    }
    Ok(price)
}

/// `stream_id,time_slot,error_value`, grouped into one history per
/// stream and slot, ordered by stream then slot.
pub fn parse_errors(text: &str, path: &Path) -> Result<Vec<ErrorHistory>, ConfigError> {
    let mut rdr = csv_reader(text);
    let head = headers(&mut rdr, path)?;
    if head != ["stream_id", "time_slot", "error_value"] {
        return Err(invalid(
            path,
            format!("header {head:?}, expected [\"stream_id\", \"time_slot\", \"error_value\"]"),
        ));
    }
    let mut groups: BTreeMap<(StreamId, usize), Vec<f64>> = BTreeMap::new();
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let stream = StreamId::parse(&rec[0]).ok_or_else(|| ConfigError::Parse {
            path: path.to_path_buf(),
            message: format!("line {line}: unknown stream {:?}", &rec[0]),
        })?;
        let slot: usize = rec[1].parse().map_err(|_| ConfigError::Parse {
            path: path.to_path_buf(),
            message: format!("line {line}: time_slot {:?} is not an index", &rec[1]),
        })?;
        let v = number(&rec[2], path, line, "error_value")?;
        groups.entry((stream, slot)).or_default().push(v);
    }
    Ok(groups
        .into_iter()
        .map(|((stream, slot), samples)| ErrorHistory::new(stream, slot, samples))
        .collect())
}

pub fn write_forecast_csv(forecast: &ForecastSet, zones: &[ZoneSpec]) -> String {
    let mut out = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["slot".to_string(), "t_out_c".to_string()];
    head.extend(zones.iter().map(|z| format!("p_sum_kw_{}", z.name)));
    out.write_record(&head).expect("in-memory write");
    for t in 0..forecast.horizon() {
        let mut row = vec![t.to_string(), format!("{}", forecast.t_out[t])];
        row.extend(forecast.net_load.iter().map(|s| format!("{}", s[t])));
        out.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(out.into_inner().expect("flush")).expect("utf8")
}

pub fn write_price_csv(price: &[f64]) -> String {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["slot", "price_per_kwh"]).expect("in-memory write");
    for (t, p) in price.iter().enumerate() {
        out.write_record([t.to_string(), format!("{p}")])
            .expect("in-memory write");
    }
    String::from_utf8(out.into_inner().expect("flush")).expect("utf8")
}

pub fn write_errors_csv(histories: &[ErrorHistory]) -> String {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["stream_id", "time_slot", "error_value"])
        .expect("in-memory write");
    for h in histories {
        let label = h.stream.label();
        for v in &h.samples {
            out.write_record([label.clone(), h.slot.to_string(), format!("{v}")])
                .expect("in-memory write");
        }
    }
    String::from_utf8(out.into_inner().expect("flush")).expect("utf8")
}

/// Everything an experiment reads, typed and checked.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    /// Hex sha256 of the resolved manifest, as written by [`Manifest::to_toml`].
    pub manifest_hash: String,
    pub houses: Vec<HouseSpec>,
    pub zones: Vec<ZoneSpec>,
    pub forecast: ForecastSet,
    pub histories: Vec<ErrorHistory>,
}

impl Experiment {
    pub fn out_dir(&self) -> PathBuf {
        let dir = self.manifest.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
        resolve(&self.manifest_path, &dir)
    }

    /// Provenance line written at the top of every CSV output.
    pub fn provenance(&self) -> String {
        format!("# hpdro {TOOL_VERSION} manifest-sha256 {}\n", self.manifest_hash)
    }
}

fn resolve(manifest_path: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads and checks the manifest and every file it references. Houses
/// are restricted to those listed in some zone, in zone order.
pub fn load_experiment(manifest_path: &Path) -> Result<Experiment, ConfigError> {
    let manifest = Manifest::parse(&read(manifest_path)?, manifest_path)?;
    experiment_from(manifest, manifest_path)
}

/// As [`load_experiment`] for an in-memory manifest, for instance one with
/// command-line overrides applied. Relative paths still resolve against
/// `manifest_path`.
pub fn experiment_from(manifest: Manifest, manifest_path: &Path) -> Result<Experiment, ConfigError> {
    manifest.check(manifest_path)?;
    let hash = sha256_hex(manifest.to_toml().as_bytes());
    let houses_path = resolve(manifest_path, &manifest.houses);
    let all_houses = parse_houses(&read(&houses_path)?, &houses_path)?;
    let zones = manifest.zones(manifest_path)?;
    let mut houses = Vec::new();
    for z in &zones {
        for id in &z.houses {
            let h = all_houses
                .iter()
                .find(|h| h.id == *id)
                .ok_or_else(|| invalid(manifest_path, format!("zone {} lists unknown house {id}", z.name)))?;
            if houses.iter().any(|x: &HouseSpec| x.id == *id) {
                return Err(invalid(manifest_path, format!("house {id} is in more than one zone")));
            }
            houses.push(h.clone());
        }
    }
    let h = manifest.horizon;
    let fpath = resolve(manifest_path, &manifest.forecast);
    let (t_out, net_load) = parse_forecast(&read(&fpath)?, &fpath, &zones, h)?;
    let ppath = resolve(manifest_path, &manifest.price);
    let price = parse_price(&read(&ppath)?, &ppath, h)?;
    let epath = resolve(manifest_path, &manifest.errors);
    let histories = parse_errors(&read(&epath)?, &epath)?;
    let forecast = ForecastSet {
        t_out,
        net_load,
        price,
        dt: manifest.slot_hours,
    };
    Ok(Experiment {
        manifest,
        manifest_path: manifest_path.to_path_buf(),
        manifest_hash: hash,
        houses,
        zones,
        forecast,
        histories,
    })
}

/// Writes `bytes` to `path` through a temporary file in the same
/// directory, so readers see either the old or the new file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ConfigError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(fs::Permissions::from_mode(0o644))
            .map_err(io_err(path))?;
    }
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> PathBuf {
        PathBuf::from("test.csv")
    }

    #[test]
    fn houses_round_trip() {
        let fleet = HouseSpec::reference_fleet();
        let text = write_houses(&fleet);
        assert_eq!(parse_houses(&text, &p()).unwrap(), fleet);
    }

    #[test]
    fn unknown_house_key_rejected() {
        let mut text = write_houses(&HouseSpec::reference_fleet()[..1]);
        text.push_str("r_typo = 1.0\n");
        assert!(matches!(parse_houses(&text, &p()), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn capacitance_units() {
        let mut rec = HouseRecord::from_spec(&HouseSpec::reference_fleet()[0]);
        rec.c_kwh_per_degc = None;
        rec.c_kj_per_degc = Some(5.4 * 3600.0);
        assert!((rec.to_spec().unwrap().c - 5.4).abs() < 1e-12);
        rec.c_kwh_per_degc = Some(5.4);
        assert!(matches!(rec.to_spec(), Err(ConfigError::Unit { .. })));
        rec.c_kwh_per_degc = None;
        rec.c_kj_per_degc = None;
        assert!(matches!(rec.to_spec(), Err(ConfigError::Unit { .. })));
    }

    #[test]
    fn forecast_length_mismatch() {
        let zones = vec![ZoneSpec {
            name: "a".into(),
            houses: vec![1],
            trans_capacity: 60.0,
            psi: 10.0,
        }];
        let f = ForecastSet {
            t_out: vec![1.0; 287],
            net_load: vec![vec![2.0; 287]],
            price: vec![1.0; 287],
            dt: 1.0 / 12.0,
        };
        let text = write_forecast_csv(&f, &zones);
        let err = parse_forecast(&text, &p(), &zones, 288).unwrap_err();
        assert!(
            matches!(
                err,
                ConfigError::Length {
                    got: 287,
                    expected: 288,
                    ..
                }
            ),
            "{err}"
        );
        let (t, l) = parse_forecast(&text, &p(), &zones, 287).unwrap();
        assert_eq!(t, f.t_out);
        assert_eq!(l, f.net_load);
    }

    #[test]
    fn price_and_errors_round_trip() {
        let price = vec![0.5, 1.25, 1.25];
        assert_eq!(parse_price(&write_price_csv(&price), &p(), 3).unwrap(), price);
        assert!(parse_price("slot,price_per_kwh\n0,-1\n", &p(), 1).is_err());
        let hist = vec![
            ErrorHistory::new(StreamId::Temperature, 0, vec![0.1, -0.2]),
            ErrorHistory::new(StreamId::Power("a".into()), 1, vec![0.3]),
        ];
        let back = parse_errors(&write_errors_csv(&hist), &p()).unwrap();
        assert_eq!(back.len(), 2);
        assert!(back.contains(&hist[0]) && back.contains(&hist[1]));
    }

    #[test]
    fn bad_number_names_line_and_column() {
        let err = parse_price("slot,price_per_kwh\n0,1\n1,abc\n", &p(), 2).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("price_per_kwh"), "{msg}");
    }

    #[test]
    fn manifest_rejects_unknown_keys_and_bad_beta() {
        let base = r#"
houses = "h.toml"
forecast = "f.csv"
price = "p.csv"
errors = "e.csv"
variant = "kdea-dro"
horizon = 48
slot_hours = 0.5
[[zone]]
name = "feeder"
houses = [1, 2]
trans_capacity_kw = 60.0
psi_per_kw = 10.0
[risk]
beta_power = 0.1
beta_temp = 0.1
[evaluation]
trials = 10
seed = 1
"#;
        let m = Manifest::parse(base, &p()).unwrap();
        assert_eq!(m.variant, Variant::KdeaDro);
        assert_eq!(Manifest::parse(&m.to_toml(), &p()).unwrap(), m);
        let typo = base.replace("horizon = 48", "horizon = 48\nhorizn = 3");
        assert!(Manifest::parse(&typo, &p()).is_err());
        let beta = base.replace("beta_power = 0.1", "beta_power = 1.5");
        assert!(Manifest::parse(&beta, &p()).is_err());
    }
}
