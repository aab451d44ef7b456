//! On-disk caches. The profile table is a commented CSV (r, ρ, ρ′); an
//! eigenfunction table is a bincode file named by its content key. Both carry a
//! format version and are written through a temporary file and a rename.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use vortex_spectral::eigen::{build_table, EigenDiagnostics, EigenTable, Eigenfunction, MatchingCoefficients};
use vortex_spectral::grid::{GridSpec, RadialGrid, XiGrid, XiGridSpec};
use vortex_spectral::odesys::SpectralPoint;
use vortex_spectral::profile::{sample_profile, ProfileTable, VortexProfile};

use crate::config::{sha256_hex, RunConfig};
use crate::CliError;

pub const PROFILE_FORMAT: u32 = 1;
pub const TABLE_FORMAT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheStatus {
    Hit,
    Miss,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Write `bytes` next to `path` and rename over it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(bytes).map_err(|e| io_err(&tmp, e))?;
    f.sync_all().map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

// ---------------------------------------------------------------------------
// profile

pub fn profile_path(dir: &Path) -> PathBuf {
    dir.join(format!("profile-v{PROFILE_FORMAT}.csv"))
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileRow {
    r: f64,
    rho: f64,
    drho: f64,
}

pub fn encode_profile(t: &ProfileTable, tol: f64) -> Vec<u8> {
    let mut out = format!(
        "# format_version={PROFILE_FORMAT} r_min=0 r_max={:e} h={:e} slope_a={:e} tol={:e}\n",
        t.r_join(),
        t.h,
        t.slope_a,
        tol
    )
    .into_bytes();
    let mut w = csv::Writer::from_writer(Vec::new());
    for (j, (&rho, &drho)) in t.rho.iter().zip(&t.drho).enumerate() {
        w.serialize(ProfileRow { r: j as f64 * t.h, rho, drho }).expect("in-memory csv");
    }
    out.extend(w.into_inner().expect("in-memory csv"));
    out
}

pub fn decode_profile(bytes: &[u8]) -> Result<ProfileTable, CliError> {
    let bad = |m: &str| CliError::Cache(format!("profile cache: {m}"));
    let text = std::str::from_utf8(bytes).map_err(|_| bad("not UTF-8"))?;
    let (head, body) = text.split_once('\n').ok_or_else(|| bad("empty"))?;
    let field = |k: &str| -> Result<f64, CliError> {
        head.split_whitespace()
            .find_map(|kv| kv.strip_prefix(k).and_then(|v| v.strip_prefix('=')))
            .ok_or_else(|| bad(&format!("missing {k}")))?
            .parse()
            .map_err(|_| bad(&format!("bad {k}")))
    };
    if field("format_version")? != PROFILE_FORMAT as f64 {
        return Err(bad("format version mismatch"));
    }
    let (h, slope_a) = (field("h")?, field("slope_a")?);
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let mut rho = Vec::new();
    let mut drho = Vec::new();
    for row in r.deserialize::<ProfileRow>() {
        let row = row.map_err(|e| bad(&e.to_string()))?;
        rho.push(row.rho);
        drho.push(row.drho);
    }
    if rho.len() < 2 {
        return Err(bad("too few rows"));
    }
    Ok(ProfileTable::from_columns(h, rho, drho, slope_a))
}

pub struct LoadedProfile {
    pub profile: VortexProfile,
    pub status: CacheStatus,
    /// sha256 of the cache file
    pub hash: String,
    pub path: PathBuf,
}

/// The profile table from the cache directory, solved and stored on a miss,
/// then sampled on the configured grid.
pub fn load_profile(cfg: &RunConfig, grid: Arc<RadialGrid>) -> Result<LoadedProfile, CliError> {
    let path = profile_path(&cfg.paths.cache_dir);
    let (table, bytes, status) = match fs::read(&path) {
        Ok(bytes) => (decode_profile(&bytes)?, bytes, CacheStatus::Hit),
        Err(_) => {
            let t = ProfileTable::solve().map_err(|e| CliError::Numerical(e.to_string()))?;
            let bytes = encode_profile(&t, cfg.profile.tol);
            write_atomic(&path, &bytes)?;
            // keep exactly what a later run will read back
            (decode_profile(&bytes)?, bytes, CacheStatus::Miss)
        }
    };
    let profile = sample_profile(Arc::new(table), grid, cfg.profile.tol).map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(LoadedProfile { profile, status, hash: sha256_hex(&bytes), path })
}

// ---------------------------------------------------------------------------
// eigenfunction tables

#[derive(Serialize, Deserialize)]
struct EigenRecord {
    xi: f64,
    samples: Vec<[f64; 2]>,
    derivs: Vec<[f64; 2]>,
    coeffs: MatchingCoefficients,
    gamma: (f64, f64),
    slope0: [f64; 2],
    r_match: f64,
    diagnostics: EigenDiagnostics,
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    format_version: u32,
    key: String,
    grid: GridSpec,
    xi: XiGridSpec,
    eigenfunctions: Vec<EigenRecord>,
    zero_limit: Vec<[f64; 2]>,
}

pub fn table_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("table-v{TABLE_FORMAT}-{}.bin", &key[..16]))
}

pub fn encode_table(t: &EigenTable, key: &str) -> Vec<u8> {
    let file = TableFile {
        format_version: TABLE_FORMAT,
        key: key.to_string(),
        grid: t.grid.spec,
        xi: t.xi.spec,
        eigenfunctions: t
            .eigenfunctions
            .iter()
            .map(|e| EigenRecord {
                xi: e.sp.xi,
                samples: e.samples.clone(),
                derivs: e.derivs.clone(),
                coeffs: e.coeffs,
                gamma: e.gamma,
                slope0: e.slope0,
                r_match: e.r_match,
                diagnostics: e.diagnostics,
            })
            .collect(),
        zero_limit: t.zero_limit.clone(),
    };
    bincode::serialize(&file).expect("table is plain data")
}

/// Decode a table file; `key` must match when given.
pub fn decode_table(bytes: &[u8], key: Option<&str>) -> Result<EigenTable, CliError> {
    let bad = |m: String| CliError::Cache(format!("table cache: {m}"));
    let file: TableFile = bincode::deserialize(bytes).map_err(|e| bad(e.to_string()))?;
    if file.format_version != TABLE_FORMAT {
        return Err(bad(format!("format version {} (expected {TABLE_FORMAT})", file.format_version)));
    }
    if key.is_some_and(|k| k != file.key) {
        return Err(bad("key mismatch".into()));
    }
    let grid = Arc::new(RadialGrid::new(file.grid).map_err(|e| bad(e.to_string()))?);
    let xi = XiGrid::new(file.xi).map_err(|e| bad(e.to_string()))?;
    if xi.len() != file.eigenfunctions.len() || file.eigenfunctions.iter().zip(&xi.xi).any(|(e, x)| e.xi != *x) {
        return Err(bad("ξ nodes do not match the stored grid spec".into()));
    }
    let n = grid.len();
    let eigenfunctions = file
        .eigenfunctions
        .into_iter()
        .map(|e| {
            if e.samples.len() != n || e.derivs.len() != n {
                return Err(bad(format!("eigenfunction at ξ = {} has the wrong length", e.xi)));
            }
            Ok(Eigenfunction {
                sp: SpectralPoint::from_xi(e.xi),
                grid: grid.clone(),
                samples: e.samples,
                derivs: e.derivs,
                coeffs: e.coeffs,
                gamma: e.gamma,
                slope0: e.slope0,
                r_match: e.r_match,
                diagnostics: e.diagnostics,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(EigenTable { xi, grid, eigenfunctions, zero_limit: file.zero_limit })
}

pub fn read_table(path: &Path) -> Result<EigenTable, CliError> {
    decode_table(&fs::read(path).map_err(|e| io_err(path, e))?, None)
}

pub struct LoadedTable {
    pub table: EigenTable,
    pub status: CacheStatus,
    pub key: String,
    pub path: PathBuf,
}

/// The table for `cfg`, read from the cache when its key matches and built
/// (in parallel over ξ) and stored otherwise.
pub fn load_table(cfg: &RunConfig, profile: &LoadedProfile) -> Result<LoadedTable, CliError> {
    let key = cfg.table_key(&profile.hash);
    let path = table_path(&cfg.paths.cache_dir, &key);
    if let Ok(bytes) = fs::read(&path) {
        if let Ok(table) = decode_table(&bytes, Some(&key)) {
            return Ok(LoadedTable { table, status: CacheStatus::Hit, key, path });
        }
    }
    let table = build_table(&profile.profile, &cfg.xi_grid()?, &cfg.eigen).map_err(|e| CliError::Numerical(e.to_string()))?;
    write_atomic(&path, &encode_table(&table, &key))?;
    Ok(LoadedTable { table, status: CacheStatus::Miss, key, path })
}
