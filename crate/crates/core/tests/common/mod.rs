pub mod invariance;
pub mod oracles;
pub mod validator_cases;
