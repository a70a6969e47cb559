use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use sensecov_service::cli::{Cli, Command};
use sensecov_service::{api, Service, ServiceError};

fn serve(cli: &Cli, addr: std::net::SocketAddr) -> Result<(), ServiceError> {
    let service = Service::open(&cli.store)?;
    let rt = tokio::runtime::Runtime::new().map_err(sensecov::Error::Io)?;
    rt.block_on(api::serve(service, addr)).map_err(sensecov::Error::Io)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Serve { addr } => serve(&cli, *addr).map(|_| String::new()),
        _ => cli.execute(),
    };
    match result {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
