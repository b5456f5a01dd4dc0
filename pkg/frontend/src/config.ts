/** Dashboard configuration from one env-style file (config.env). */

export interface DashboardConfig {
  apiBaseUrl: string;
}

/** Parse `KEY=value` lines; `#` starts a comment, blank lines ignored. */
export function parseEnvConfig(text: string): DashboardConfig {
  const values = new Map<string, string>();
  for (const rawLine of text.split(/\r?\n/)) {
    const line = rawLine.trim();
    if (!line || line.startsWith("#")) continue;
    const eq = line.indexOf("=");
    if (eq < 1) continue;
    values.set(line.slice(0, eq).trim(), line.slice(eq + 1).trim());
  }
  const base = values.get("API_BASE_URL");
  if (!base) {
    throw new Error("config.env must define API_BASE_URL");
  }
  return { apiBaseUrl: base.replace(/\/+$/, "") };
}

export async function loadConfig(url = "./config.env"): Promise<DashboardConfig> {
  const response = await fetch(url);
  if (!response.ok) {
    throw new Error(`cannot load ${url}: HTTP ${response.status}`);
  }
  return parseEnvConfig(await response.text());
}
